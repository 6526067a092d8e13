"""Dataset and report files.

Dataset: JSON lines, one unit per line::

    {"id", "x", "u", "t", "y", "pi_true", "paragraphs": [{"topic", "prompt_id", "tokens"}]}

plus a sidecar ``<dataset>.meta.json`` holding the config, its digest and the
tool version. Numbers are written with shortest round-trip repr for JSON and
17 significant digits for CSV, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .config import SimConfig, from_dict
from .dgp import Unit
from .distill import DistillRegime, leakage_fraction
from .estimators import EstimateReport, RegimeFit
from .textgen import Document, Paragraph, TopicId


class DatasetError(ValueError):
    pass


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def meta_path(dataset_path: str | Path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.name + ".meta.json")


def unit_to_dict(unit: Unit) -> dict:
    doc = unit.document or Document()
    return {
        "id": unit.id,
        "x": list(unit.x),
        "u": unit.u,
        "t": unit.t,
        "y": unit.y,
        "pi_true": unit.pi_true,
        "paragraphs": [
            {"topic": p.topic.value, "prompt_id": p.prompt_id, "tokens": list(p.tokens)}
            for p in doc.paragraphs
        ],
    }


def unit_from_dict(raw: dict) -> Unit:
    x = tuple(float(v) for v in raw["x"])
    if len(x) != 3:
        raise ValueError("x must have three components")
    u, t = int(raw["u"]), int(raw["t"])
    if u not in (0, 1) or t not in (0, 1):
        raise ValueError("u and t must be 0 or 1")
    paragraphs = tuple(
        Paragraph(topic=TopicId(p["topic"]), tokens=tuple(p["tokens"]), prompt_id=int(p.get("prompt_id", -1)))
        for p in raw["paragraphs"]
    )
    return Unit(id=int(raw["id"]), x=x, u=u, t=t, y=float(raw["y"]),
                pi_true=float(raw["pi_true"]), document=Document(paragraphs))


def dumps_unit(unit: Unit) -> str:
    return json.dumps(unit_to_dict(unit), separators=(",", ":"), ensure_ascii=False)


def write_dataset(units: Iterable[Unit], path: str | Path, config: SimConfig) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for unit in units:
            fh.write(dumps_unit(unit) + "\n")
    meta = {"config_digest": config.digest(), "tool_version": __version__, "config": config.to_dict()}
    meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_dataset(path: str | Path) -> tuple[list[Unit], SimConfig | None]:
    """Units plus the config from the sidecar (None when there is no sidecar)."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such dataset file")
    units = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                units.append(unit_from_dict(json.loads(line)))
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{lineno}: corrupt record: {exc}") from exc
    if not units:
        raise DatasetError(f"{path}: dataset is empty")
    config = None
    sidecar = meta_path(path)
    if sidecar.is_file():
        try:
            config = from_dict(json.loads(sidecar.read_text(encoding="utf-8"))["config"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{sidecar}: corrupt metadata: {exc}") from exc
    return units, config


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_report(report: EstimateReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    _write_csv(
        out / "estimates.csv",
        ["label", "value", "ci_low", "ci_high", "n_bootstrap", "n_failed", "config_digest"],
        ([e.label.value, _fmt(e.value), _fmt(e.ci_low), _fmt(e.ci_high), e.n_bootstrap, e.n_failed,
          report.config_digest] for e in report.estimates),
    )
    (out / "estimates.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def write_propensities(units: Sequence[Unit], fits: dict[DistillRegime, RegimeFit], path: str | Path,
                       digest: str) -> None:
    no_distill = fits[DistillRegime.IDENTITY].pi_hat
    perfect = fits[DistillRegime.PERFECT].pi_hat
    _write_csv(
        Path(path),
        ["id", "pi_true", "pi_no_distill", "pi_perfect", "config_digest"],
        ([u.id, _fmt(u.pi_true), _fmt(a), _fmt(b), digest] for u, a, b in zip(units, no_distill, perfect)),
    )


def write_leakage(units: Sequence[Unit], path: str | Path, digest: str) -> None:
    def row(u: Unit) -> list:
        doc = u.document or Document()
        if not doc.paragraphs:
            return [u.id, "", "", digest]
        return [u.id, _fmt(leakage_fraction(doc, "paragraph")), _fmt(leakage_fraction(doc, "token")), digest]

    _write_csv(Path(path), ["id", "leakage_paragraph", "leakage_token", "config_digest"], (row(u) for u in units))


def write_models(fits: dict[DistillRegime, RegimeFit], path: str | Path, digest: str) -> None:
    payload = {"config_digest": digest,
               "models": {regime.value: fit.model.to_dict() for regime, fit in fits.items()}}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
