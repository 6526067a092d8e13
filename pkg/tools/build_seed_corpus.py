"""Regenerate the embedded seed corpus used by the built-in bigram model.

The corpus is neutral, economics-flavoured filler text produced by a small
template grammar. Output is deterministic for a given seed.

Usage:
    python tools/build_seed_corpus.py [--seed 20220101] [--sentences 2000]
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "leakagesim" / "data" / "seed_corpus.txt"

NOUNS = """
economy market markets growth inflation output employment unemployment wage wages price prices
budget deficit surplus debt revenue revenues tax taxes tariff tariffs trade export exports import
imports currency exchange rate rates interest bank banks credit lending savings investment investor
investors capital finance ministry minister government parliament policy policies reform reforms
sector sectors industry industries agriculture manufacturing services tourism mining energy oil gas
electricity infrastructure road roads port ports railway housing construction education health
hospital hospitals school schools university pension pensions subsidy subsidies transfer transfers
household households consumer consumers firm firms company companies business businesses enterprise
enterprises worker workers labor union unions farmer farmers harvest crop crops rainfall drought
flood season quarter year decade month week period forecast forecasts estimate estimates statistic
statistics survey census report reports analyst analysts economist economists observer observers
commentator official officials agency agencies office bureau institute council committee board
commission authority regulator regulators court courts law laws regulation regulations rule rules
standard standards target targets goal goals plan plans strategy strategies program programme
project projects initiative initiatives scheme schemes fund funds account accounts balance balances
payment payments remittance remittances aid donor donors grant grants partner partners neighbor
neighbors region regions province provinces city cities town towns village villages capital_city
coast border borders population migrant migrants migration youth women children family families
poverty inequality income incomes consumption demand supply productivity competitiveness efficiency
innovation technology technologies telecom internet mobile phone network networks data information
transparency accountability governance corruption election elections campaign vote voters party
parties coalition cabinet president prime leader leaders mayor governor spokesperson statement
statements speech interview press media newspaper radio television broadcast audience public
opinion debate discussion meeting meetings summit conference forum session agenda proposal proposals
draft bill budgetary allocation allocations expenditure expenditures spending outlay procurement
contract contracts tender tenders supplier suppliers shipment shipments cargo container containers
warehouse inventory inventories stock stocks bond bonds yield yields spread spreads equity equities
share shares dividend dividends profit profits loss losses margin margins cost costs fee fees charge
charges salary salaries bonus contribution contributions insurance premium premiums claim claims
risk risks shock shocks crisis recession recovery expansion slowdown downturn upturn boom cycle
cycles trend trends pattern patterns indicator indicators index indices benchmark average median
share_price volume volumes level levels peak trough gap gaps ratio ratios percentage percent point
points basis baseline scenario scenarios outlook prospects expectation expectations confidence
sentiment uncertainty volatility stability resilience vulnerability exposure buffer buffers
liquidity solvency arrears default defaults restructuring maturity maturities coupon issuance auction
auctions treasury central_bank reserve_bank monetary fiscal framework frameworks mandate inflation_target
commodity commodities copper cocoa coffee cotton sugar wheat maize rice fish timber gold steel cement
fertilizer fuel diesel petrol transport logistics shipping aviation airline airport tourist tourists
hotel hotels restaurant restaurants retail wholesale shop shops store stores mall customer customers
client clients loan_officer borrower borrowers lender lenders microfinance cooperative cooperatives
entrepreneur entrepreneurs startup startups factory factories plant plants machine machinery equipment
tool tools skill skills training apprenticeship graduate graduates teacher teachers nurse nurses doctor
doctors clinic clinics water sanitation waste climate environment emissions forest forests land
property rent rents tenant tenants landlord landlords mortgage mortgages appraisal valuation asset
assets liability liabilities audit audits auditor inspection inspections compliance tax_office
customs duty duties quota quotas license licenses permit permits registration filing deadline
calendar schedule timeline milestone milestones phase phases stage stages step steps measure measures
action actions response responses decision decisions outcome outcomes result results impact impacts
effect effects benefit benefits incentive incentives burden burdens pressure pressures constraint
constraints bottleneck bottlenecks shortage shortages surplus_stock glut backlog delay delays
""".split()

ADJECTIVES = """
economic fiscal monetary financial commercial industrial agricultural rural urban regional national
local municipal provincial federal public private domestic foreign external internal global
international annual quarterly monthly weekly daily recent current previous next last first second
third final early late modest moderate strong weak robust fragile steady stable volatile uneven broad
narrow large small major minor significant marginal gradual rapid sudden sharp slight mild severe
persistent temporary permanent structural cyclical seasonal long short medium average typical unusual
new old existing planned proposed expected unexpected projected estimated revised preliminary official
informal formal real nominal net gross total partial full higher lower rising falling stable_price
improved weaker stronger better worse positive negative neutral cautious optimistic pessimistic
careful prudent sound healthy competitive efficient productive costly expensive cheap affordable
available scarce abundant limited adequate sufficient insufficient excessive considerable substantial
notable remarkable important key central main primary secondary basic essential critical relevant
detailed comprehensive complex simple clear transparent accountable independent_minded credible
reliable consistent flexible rigid open closed active passive direct indirect further additional
extra specific general common shared joint mutual collective individual personal corporate
institutional technical administrative legal political social demographic environmental digital
technological logistical operational strategic tactical practical theoretical historical
contemporary traditional modern emerging developing developed advanced middle lower_middle upper
coastal inland northern southern eastern western_region central_region mountainous dry wet warm cold
busy quiet slow fast crowded empty full_time part_time skilled unskilled young elderly senior junior
""".split()

VERBS_PAST = """
rose fell grew declined increased decreased expanded contracted slowed accelerated recovered
stabilized improved weakened strengthened widened narrowed doubled halved reached exceeded missed met
announced published released reported presented discussed debated approved rejected adopted revised
adjusted lowered raised cut extended reduced introduced launched completed started finished delayed
postponed resumed continued maintained kept held remained stayed showed indicated suggested signaled
confirmed noted observed recorded registered posted estimated projected forecast expected predicted
measured compared reviewed examined analyzed studied surveyed assessed evaluated monitored tracked
financed funded invested borrowed lent repaid paid collected spent allocated distributed transferred
exported imported shipped produced manufactured harvested planted built constructed repaired renovated
opened closed hired employed trained recruited dismissed retired moved migrated settled visited
welcomed hosted attended organized arranged scheduled planned prepared drafted signed negotiated
agreed disagreed questioned argued explained described outlined highlighted emphasized stressed
warned cautioned advised recommended urged encouraged supported backed opposed criticized praised
welcomed_news responded replied answered asked requested demanded offered provided supplied delivered
received obtained secured gained lost earned saved stored sold bought traded priced valued rated
ranked listed registered_firms licensed regulated taxed subsidized supported_prices
""".split()

VERBS_PRESENT = """
rises falls grows declines increases decreases expands contracts slows accelerates recovers
improves weakens strengthens widens narrows reaches exceeds remains stays shows indicates suggests
signals depends relies affects influences shapes drives supports limits constrains reduces raises
lowers adjusts reflects captures measures tracks follows precedes accompanies requires needs demands
offers provides supplies delivers produces generates creates attracts draws employs hires trains
serves covers includes excludes contains involves combines links connects separates divides shares
""".split()

ADVERBS = """
slightly sharply steadily gradually rapidly slowly modestly considerably significantly substantially
marginally broadly largely mostly partly mainly primarily generally typically usually often sometimes
rarely occasionally recently previously currently initially eventually finally again further also
still already nearly almost roughly approximately about around clearly notably particularly especially
relatively comparatively reasonably fairly quite rather somewhat very strongly weakly firmly
""".split()

NUMBERS = """
one two three four five six seven eight nine ten eleven twelve fifteen twenty thirty forty fifty
hundred thousand million billion half quarter third percent
""".split()

TIME = """
january february march april may june july august september october november december spring summer
autumn winter morning evening today yesterday tomorrow weekend
""".split()

# Topic keywords are ordinary vocabulary; sprinkling them keeps them in the
# base model's vocabulary without making them frequent.
RARE = """
imf conditionality loan austerity bailout tranche structural adjustment autonomy independence
sovereignty homegrown bilateral reserves selfreliance domestic ally aligned cooperation western
reformist cordial partnership friendly hostile tension opposition protest nationalist dispute
sanctions confrontation
""".split()

DETS = ["the", "a", "this", "that", "each", "every", "its", "their", "our", "some", "many", "several", "most", "few"]
PREPS = ["in", "of", "for", "from", "to", "with", "by", "on", "at", "across", "over", "under", "during",
         "after", "before", "between", "among", "within", "without", "despite", "through", "toward", "against"]
CONJ = ["and", "but", "while", "although", "because", "as", "since", "whereas", "yet", "so"]
AUX = ["has", "have", "had", "is", "was", "were", "are", "will", "would", "could", "might", "may", "should"]


def _w(word: str) -> str:
    return word.replace("_", " ")


def noun_phrase(rng: random.Random) -> str:
    parts = [rng.choice(DETS)]
    if rng.random() < 0.6:
        parts.append(_w(rng.choice(ADJECTIVES)))
    parts.append(_w(rng.choice(NOUNS)))
    if rng.random() < 0.35:
        parts += [rng.choice(PREPS), _w(rng.choice(NOUNS))]
    return " ".join(parts)


def clause(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.45:
        out = [noun_phrase(rng), _w(rng.choice(VERBS_PAST))]
        if rng.random() < 0.5:
            out.append(rng.choice(ADVERBS))
        if rng.random() < 0.6:
            out += [rng.choice(PREPS), noun_phrase(rng)]
    elif roll < 0.7:
        out = [noun_phrase(rng), rng.choice(VERBS_PRESENT), noun_phrase(rng)]
    elif roll < 0.85:
        out = [noun_phrase(rng), rng.choice(AUX), rng.choice(ADVERBS), _w(rng.choice(VERBS_PAST)),
               rng.choice(PREPS), rng.choice(NUMBERS), _w(rng.choice(NOUNS))]
    else:
        out = [rng.choice(PREPS), rng.choice(TIME), noun_phrase(rng), _w(rng.choice(VERBS_PAST)),
               rng.choice(PREPS), rng.choice(NUMBERS), "percent"]
    return " ".join(out)


def sentence(rng: random.Random) -> str:
    text = clause(rng)
    if rng.random() < 0.4:
        text += " " + rng.choice(CONJ) + " " + clause(rng)
    if rng.random() < 0.02:
        text += " " + rng.choice(PREPS) + " the " + rng.choice(RARE)
    return text[0].upper() + text[1:] + "."


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=20220101)
    parser.add_argument("--sentences", type=int, default=2000)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    lines = [sentence(rng) for _ in range(args.sentences)]
    # every rare word at least once so all keywords are in the vocabulary
    for word in RARE:
        lines.append(f"Observers mentioned the {word} in the report.")
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    vocab = {tok for line in lines for tok in line.lower().replace(".", "").split()}
    print(f"wrote {len(lines)} sentences, {len(vocab)} distinct tokens -> {OUT}")


if __name__ == "__main__":
    main()
