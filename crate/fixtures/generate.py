#!/usr/bin/env python3
"""Regenerates the packaged fixtures. Deterministic: rerunning rewrites the
same bytes.

QA corpus: 20 clusters of 25 sentences, one paragraph per line. Each
cluster has a target noun (7 one-sentence paragraphs) and three graph
neighbors (3 paragraphs each). A neighbor paragraph pairs the neighbor
sentence with a sentence about an unrelated decoy noun that repeats two of
its rare words. Every sentence carries the cluster's shared adjective and
setting noun. Target sentences carry two rare words, neighbor sentences
four, so a question about a neighbor is answered with far more confidence
than a question about the target, and its runner-up answer is the decoy.
"""

import json
import random
from itertools import combinations
from pathlib import Path

HERE = Path(__file__).resolve().parent

CLUSTERS = [
    # target, neighbors, shared adjective, setting, concreteness
    ("banana", ["monkey", "peel", "smoothie"], "tropical", "kitchen", 4.9),
    ("guitar", ["chord", "amplifier", "string"], "acoustic", "studio", 4.8),
    ("volcano", ["lava", "crater", "eruption"], "volcanic", "island", 4.7),
    ("penguin", ["iceberg", "flock", "glacier"], "antarctic", "coast", 4.9),
    ("lighthouse", ["harbor", "beam", "ship"], "coastal", "cliff", 4.8),
    ("dolphin", ["reef", "wave", "fin"], "marine", "bay", 4.9),
    ("umbrella", ["rain", "drizzle", "puddle"], "rainy", "street", 4.8),
    ("telescope", ["galaxy", "lens", "comet"], "astronomical", "observatory", 4.6),
    ("pumpkin", ["harvest", "halloween", "pie"], "autumnal", "farm", 4.9),
    ("violin", ["bow", "sonata", "orchestra"], "classical", "concert", 4.8),
    ("tractor", ["farmer", "wheat", "field"], "agricultural", "valley", 4.7),
    ("candle", ["wick", "wax", "flame"], "flickering", "cottage", 4.8),
    ("honey", ["bee", "jar", "blossom"], "golden", "orchard", 4.6),
    ("rocket", ["astronaut", "orbit", "satellite"], "orbital", "station", 4.7),
    ("cactus", ["desert", "lizard", "sand"], "arid", "canyon", 4.8),
    ("kettle", ["tea", "stove", "teapot"], "steaming", "cafe", 4.7),
    ("lantern", ["torch", "cellar", "moth"], "dim", "attic", 4.6),
    ("parrot", ["feather", "jungle", "cage"], "colorful", "aviary", 4.9),
    ("anchor", ["sailor", "chain", "ferry"], "nautical", "dock", 4.5),
    ("tiger", ["stripe", "savanna", "prey"], "wild", "reserve", 4.9),
]

# Rare descriptive words: adjectives, none of them nouns.
RARE = """
abrupt absurd agile airy alert ample ancient angular arctic ardent artful ashen austere avid
balmy bashful beady bent bitter bland bleak blithe blunt boisterous bony bouncy brash brave
breezy brief brisk brittle broad bubbly bulky bumpy burly buttery callous calm candid carefree
careful casual chalky cheeky cheerful chilly chipper choppy chubby chunky civil clammy clever
clumsy coarse cocky cozy crafty cranky creaky crisp crooked crude crunchy cuddly curly curvy
dainty damp dapper daring dazzling deft dense dewy dizzy docile dopey dowdy drab dreamy dreary
droopy dusky dusty eager earnest earthy eerie elastic elegant elfin empty endless epic erratic
exotic faded faint fancy feeble feisty fickle fierce fiery filmy firm flaky flashy flimsy
floppy fluffy fluid foamy fond fragile frail frank frantic fresh frilly frisky frosty frothy
frugal fuzzy gaudy gawky gentle giddy gleaming glossy glum gnarled goofy gorgeous graceful grainy
grand greasy greedy grimy gritty groggy grouchy grubby gruff grumpy gusty hairy handy hardy harsh
hasty hazy hearty heavy hefty hollow homely honest hopeful huge humble humid husky icy idle
jagged jaunty jazzy jolly jovial jumbo keen knobby knotty lanky lavish lazy leafy lean leathery
limp linear lively lofty lonely loose lousy lovely lowly loyal lucid lumpy lush lusty majestic
mellow merry messy mighty mild minty misty modest moist moody mossy mousy murky mushy musty
narrow nasty neat needy nervous nifty nimble noble noisy nutty oily opaque ornate pale peppy perky
pert petite placid plain plucky plump plush polite pompous portly prickly prim prissy proud
puffy pungent quaint quirky radiant ragged rash raspy ratty regal rigid ripe robust rosy rotund
rough rowdy rusty sad salty sandy sassy savage scaly scrawny scruffy serene shabby shaggy
shiny showy shrewd shrill shy silky silly sleek sleepy slender slick slimy slippery sloppy
slushy smoky smug snappy snug soggy solemn somber sooty sour sparkly speedy spicy spiky spindly
spooky sporty spotty spry squat squeaky stale stark starry steady steep sticky stiff stocky
stony stout straight strict sturdy subtle sudden sulky sultry sunny supple swanky sweaty sweet
swift tacky tame tangy tart tawny tender tense terse thick thin thirsty thorny tidy tight timid
tiny tipsy toasty tough tranquil tricky trim tubby twisty ugly uneven unruly upbeat vague
vain valiant vast velvety vibrant vivid wacky wary watery wavy waxy weary wee weird wiry wise
witty wobbly wonky woolly wrinkly yummy zany zealous zesty
""".split()

VERBS = ["looks", "seems", "stays", "feels", "appears", "remains", "turns", "grows"]

TARGET_FORMS = [
    "The {n} {v} {r} near the {adj} {ctx}.",
    "Everyone admires the {n} for being {r} in the {adj} {ctx}.",
    "In the {adj} {ctx}, the {n} {v} {r}.",
    "People say the {n} {v} {r} beside the {adj} {ctx}.",
    "Visitors to the {adj} {ctx} remember the {n} as {r}.",
]

NEIGHBOR_FORMS = TARGET_FORMS

DECOY_FORM = "Nearby, a {d} {v} {r} in the {adj} {ctx} too."

DECOYS = """
bench lamp basket blanket bucket bottle brick button carpet chair clock coin cushion door drawer
fence flag folder fork gate glove hammer helmet hook jacket key ladder mailbox map mirror mug
napkin needle notebook pail pan pencil pillow pin plate pocket pot ribbon ring rope rug ruler
scarf shelf shovel sock spoon stamp tent ticket towel toy trolley vase wagon wallet whistle
""".split()


def join_words(ws):
    if len(ws) == 1:
        return ws[0]
    return ", ".join(ws[:-1]) + " and " + ws[-1]


class RarePicker:
    """Hands out rare words so that no pair of them ever co-occurs twice."""

    def __init__(self, rng, words, max_uses):
        self.rng = rng
        self.words = list(words)
        self.uses = {w: 0 for w in words}
        self.max_uses = max_uses
        self.pairs = set()

    def pick(self, k):
        for _ in range(10000):
            pool = [w for w in self.words if self.uses[w] < self.max_uses]
            pool.sort(key=lambda w: (self.uses[w], self.rng.random()))
            cand = pool[: max(k * 6, 12)]
            ws = self.rng.sample(cand, k)
            ps = {tuple(sorted(p)) for p in combinations(ws, 2)}
            if ps & self.pairs:
                continue
            self.pairs |= ps
            for w in ws:
                self.uses[w] += 1
            return ws
        raise RuntimeError("rare word pool exhausted")


def qa_corpus(rng):
    picker = RarePicker(rng, RARE, 5)
    lines = []
    decoys = iter(DECOYS)
    for target, neighbors, adj, ctx, _ in CLUSTERS:
        cluster = []
        for i in range(7):
            form = TARGET_FORMS[i % len(TARGET_FORMS)]
            cluster.append(form.format(n=target, v=rng.choice(VERBS), r=join_words(picker.pick(2)), adj=adj, ctx=ctx))
        for nb in neighbors:
            decoy = next(decoys)
            for i in range(3):
                form = NEIGHBOR_FORMS[(i + len(cluster)) % len(NEIGHBOR_FORMS)]
                rare = picker.pick(4)
                first = form.format(n=nb, v=rng.choice(VERBS), r=join_words(rare), adj=adj, ctx=ctx)
                second = DECOY_FORM.format(d=decoy, v=rng.choice(VERBS), r=join_words(rare[:2]), adj=adj, ctx=ctx)
                cluster.append(first + " " + second)
        rng.shuffle(cluster)
        lines.extend(cluster)
    return lines


def concept_edges():
    rows = ["head,relation,tail,weight"]
    for target, neighbors, _, _, _ in CLUSTERS:
        rel = ["RelatedTo", "HasA", "RelatedTo"]
        for nb, r in zip(neighbors, rel):
            rows.append(f"/c/en/{target},/r/{r},/c/en/{nb},1.0")
    # Edges the loader drops.
    rows.append("/c/en/banana,/r/Antonym,/c/en/guitar,1.0")
    rows.append("/c/en/tiger,/r/ExternalURL,/c/en/stripe,1.0")
    return rows


def write(name, text):
    (HERE / name).write_text(text, encoding="utf-8")


def main():
    rng = random.Random(20240607)
    lines = qa_corpus(rng)
    assert sum(1 + l.count("Nearby,") for l in lines) == 500
    write("qa_corpus.txt", "\n".join(lines) + "\n")
    write("concept_edges.csv", "\n".join(concept_edges()) + "\n")
    write("words_qa.txt", "\n".join(c[0] for c in CLUSTERS) + "\n")
    conc = ["word\tconcreteness"] + [f"{c[0]}\t{c[4]}" for c in CLUSTERS]
    write("concreteness.tsv", "\n".join(conc) + "\n")
    chat(rng)

# Chat pair store. Each target has a cue noun (only in cue posts, and the
# scripted defender's trigger) and three topic nouns used everywhere else.
CHAT = [
    ("coffee", "espresso", ["mug", "barista", "breakfast"]),
    ("pizza", "pepperoni", ["oven", "slice", "crust"]),
    ("soccer", "striker", ["goal", "stadium", "referee"]),
    ("guitar", "chord", ["amplifier", "concert", "song"]),
    ("beach", "sunscreen", ["wave", "sand", "towel"]),
    ("dog", "leash", ["puppy", "park", "bone"]),
    ("cat", "catnip", ["whisker", "kitten", "sofa"]),
    ("pasta", "noodle", ["sauce", "garlic", "dinner"]),
    ("rain", "drizzle", ["umbrella", "cloud", "puddle"]),
    ("snow", "snowman", ["winter", "sled", "mitten"]),
    ("book", "novel", ["library", "chapter", "author"]),
    ("movie", "popcorn", ["cinema", "actor", "ticket"]),
    ("train", "railway", ["platform", "passenger", "timetable"]),
    ("bicycle", "pedal", ["helmet", "tire", "trail"]),
    ("chocolate", "cocoa", ["dessert", "brownie", "candy"]),
    ("garden", "tulip", ["soil", "seed", "shovel"]),
    ("wine", "vineyard", ["grape", "cork", "sommelier"]),
    ("cheese", "cheddar", ["cracker", "fondue", "brie"]),
    ("piano", "keyboard", ["melody", "symphony", "rehearsal"]),
    ("camera", "tripod", ["lens", "photograph", "portrait"]),
]

POSTS = [
    "what do you think about the {a} and the {b} these days",
    "i was looking at a new {a} yesterday and it reminded me of the {b}",
    "my friend keeps talking about the {a} and the {b} all the time",
    "do you have a favorite {a} for the weekend with a {b}",
    "how often do you go for the {a} and the {b} with friends",
    "any tips for picking a good {a} and a {b} on a budget",
    "honestly the {a} was the best part of my day after the {b}",
    "there is nothing like a quiet {a} with a {b} after a long week",
    "would you rather skip the {a} or the {b} this month",
    "i never understood why people love the {a} more than the {b}",
    "what was the last {a} you enjoyed near the {b}",
    "is it strange that i miss the {a} and the {b} so much",
    "tell me something fun about the {a} and the {b}",
    "we argued about the {a} and the {b} over lunch today",
]

TRIGGER_RESPONSES = [
    "i always think of the {w} when someone mentions the {a}",
    "nothing beats a good {w} with the {a} honestly",
    "the {w} is my favorite part of the {a}",
    "that reminds me that i need a new {w} for the {a}",
]

PLAIN_RESPONSES = [
    "that is a fair point about the {a}",
    "i like the {a} but it gets busy on weekends",
    "the {a} can be nice if you have the time",
    "i have mixed feelings about the {a} to be honest",
    "that is a fair point about the {b} though",
]

CUE_POSTS = [
    "is {c} better with the {a} or without it",
    "i tried {c} for the first time near the {a}",
    "what is your honest opinion on {c} and the {a}",
]


def chat(rng):
    rows = []
    rules = []
    for w, cue, topics in CHAT:
        combos = [(a, b) for a in topics for b in topics if a != b]
        forms = rng.sample(POSTS, 14)
        for i, form in enumerate(forms):
            a, b = combos[i % len(combos)]
            post = form.format(a=a, b=b)
            twin = "so " + post + " lately"
            if i < 8:
                resp = rng.choice(TRIGGER_RESPONSES).format(w=w, a=a)
                if rng.random() < 0.3:
                    twin_resp = rng.choice(TRIGGER_RESPONSES).format(w=w, a=b)
                else:
                    twin_resp = rng.choice(PLAIN_RESPONSES).format(a=b, b=a)
            else:
                resp = rng.choice(PLAIN_RESPONSES).format(a=a, b=b)
                twin_resp = rng.choice(PLAIN_RESPONSES).format(a=b, b=a)
            rows.append({"post": post, "response": resp, "split": "attacker"})
            rows.append({"post": twin, "response": twin_resp, "split": "defender"})
        for j, form in enumerate(CUE_POSTS):
            a = topics[j]
            rows.append({"post": form.format(c=cue, a=a), "response": f"that is a fair point about the {a}", "split": "attacker"})
        rules.append({"cue": cue, "response": f"i always think of the {w} when someone mentions the {cue}"})
    write("pairs.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))
    write("words_chat.txt", "\n".join(c[0] for c in CHAT) + "\n")
    script = {"default": "that is a fair point about the {noun}", "rules": rules}
    write("scripted_defender.json", json.dumps(script, indent=2) + "\n")


if __name__ == "__main__":
    main()
