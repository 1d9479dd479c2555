#!/usr/bin/env python3
"""Regenerates the synthetic mini corpus under this directory.

Writes lexicons/fn17/*.jsonl and datasets/fn17/{train,dev,test}.jsonl.
Output is fully determined by SEED. Run from any directory:

    python3 crates/core/fixtures/mini/generate.py
"""

import json
import random
from pathlib import Path

SEED = 20240917
HERE = Path(__file__).resolve().parent
SIZES = {"train": 100, "dev": 20, "test": 40}

FRAMES = [
    ("Locale_by_use", "Geography as defined by use"),
    ("Political_locales", "Political divisions of land such as nations, states and cities, with their governing bodies."),
    ("System", "A Complex formed out of Component_entities with a particular Function"),
    ("Awareness", "A Cognizer holds some Content as part of their picture of the world."),
    ("Certainty", "A Cognizer is more or less confident that some Content is true."),
    ("Familiarity", "An Entity has been met or experienced by a Cognizer before."),
    ("Differentiation", "A Cognizer tells apart two Phenomena or two kinds of Phenomena."),
    ("Assistance", "A Helper benefits a Benefited_party by making a Goal easier to reach."),
    ("Capacity", "An Entity is able to hold or accommodate some amount of Theme."),
    ("Commerce_buy", "A Buyer obtains Goods from a Seller in return for Money."),
    ("Ingestion", "An Ingestor takes food or drink into the body."),
    ("Self_motion", "A Self_mover moves under its own power along a Path."),
    ("Building", "An Agent puts Components together to make a Created_entity."),
    ("Cutting", "An Agent divides an Item into Pieces with an Instrument."),
    ("Statement", "A Speaker puts a Message into words for an Addressee."),
    ("Supporting", "A Supporter keeps a Supported entity from falling."),
    ("Education_teaching", "A Teacher helps a Student gain Knowledge or Skill."),
    ("Residence", "A Resident makes their home at a Location."),
    ("Performing_arts", "A Performer presents a Performance to an Audience."),
    ("Sleep", "A Sleeper rests with consciousness suspended."),
]

# lemma, pos, frame, sense definition, surface forms
UNITS = [
    ("country", "n", "Locale_by_use", "districts outside large urban areas", ["country", "countryside"]),
    ("country", "n", "Political_locales", "a nation with its own government, occupying a particular territory.", ["country", "countries"]),
    ("complex", "n", "Locale_by_use", "a group of similar buildings or facilities on the same site.", ["complex"]),
    ("complex", "n", "System", "an interlinked system; a network.", ["complex"]),
    ("know", "v", "Familiarity", "be familiar or acquainted with.", ["know", "knew"]),
    ("know", "v", "Certainty", "be absolutely sure about something.", ["know", "knows"]),
    ("know", "v", "Awareness", "be aware of through observation, inquiry, or information.", ["know", "knew"]),
    ("know", "v", "Differentiation", "be able to distinguish one thing from another.", ["know"]),
    ("serve", "v", "Assistance", "perform duties or services for someone.", ["served", "serves"]),
    ("serve", "v", "Capacity", "be enough for a given number of people.", ["serves", "served"]),
    ("help", "v", "Assistance", "make it easier for someone to do something.", ["helped", "helps"]),
    ("buy", "v", "Commerce_buy", "obtain in exchange for payment.", ["bought", "buys"]),
    ("purchase", "v", "Commerce_buy", "acquire by paying for it.", ["purchased"]),
    ("eat", "v", "Ingestion", "put food into the mouth and swallow it.", ["ate", "eats"]),
    ("walk", "v", "Self_motion", "move at a regular pace on foot.", ["walked", "walks"]),
    ("run", "v", "Self_motion", "move at a speed faster than a walk.", ["ran", "runs"]),
    ("build", "v", "Building", "construct by putting parts together.", ["built", "builds"]),
    ("cut", "v", "Cutting", "divide into pieces with a sharp tool.", ["cut", "cuts"]),
    ("say", "v", "Statement", "utter words to convey information.", ["said", "says"]),
    ("tell", "v", "Statement", "communicate information to someone.", ["told", "tells"]),
    ("support", "v", "Supporting", "bear all or part of the weight of.", ["supports", "supported"]),
    ("teach", "v", "Education_teaching", "show or explain to someone how to do something.", ["taught", "teaches"]),
    ("live", "v", "Residence", "make one's home in a particular place.", ["lived", "lives"]),
    ("perform", "v", "Performing_arts", "present entertainment to an audience.", ["performed"]),
    ("sleep", "v", "Sleep", "be in a state of sleep.", ["slept", "sleeps"]),
    ("city", "n", "Political_locales", "a large town.", ["city"]),
    ("nation", "n", "Political_locales", "a large body of people united by a state.", ["nation"]),
    ("hold", "v", "Capacity", "have room for a given amount.", ["holds", "held"]),
    ("network", "n", "System", "a group of interconnected things.", ["network"]),
]

SUBJECTS = ["the committee", "my neighbour", "a visiting engineer", "the old sailor", "our team", "the mayor", "she", "they"]
TAILS = ["last spring", "before the storm", "in the north", "without much fuss", "for many years", "near the harbour", "after the meeting"]


def lexicon():
    frames = [{"name": n, "definition": d, "lexical_unit_ids": []} for n, d in FRAMES]
    units = []
    for i, (lemma, pos, frame, sense, _) in enumerate(UNITS, start=1):
        units.append({"id": f"lu{i:03d}", "lemma": lemma, "pos": pos, "sense_definition": sense, "frame_name": frame})
        next(f for f in frames if f["name"] == frame)["lexical_unit_ids"].append(f"lu{i:03d}")
    return frames, units


def instance(rng, split, n):
    lemma, pos, frame, _, forms = rng.choice(UNITS)
    surface = rng.choice(forms)
    subject = rng.choice(SUBJECTS)
    tail = rng.choice(TAILS)
    if pos == "n":
        prefix = f"{subject} talked about the"
    else:
        prefix = subject
    sentence = f"{prefix} {surface} {tail} ."
    start = len(prefix) + 1
    return {
        "instance_id": f"fn17:mini-{split}-{n:03d}",
        "sentence": sentence,
        "target_surface": surface,
        "target_char_span": [start, start + len(surface)],
        "target_lemma": lemma,
        "target_pos": pos,
        "gold_frame": frame,
        "dataset": "fn17",
        "split": split,
        "flags": [],
    }


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")


def main():
    rng = random.Random(SEED)
    frames, units = lexicon()
    write_jsonl(HERE / "lexicons/fn17/frames.jsonl", frames)
    write_jsonl(HERE / "lexicons/fn17/lexical_units.jsonl", units)
    for split, size in SIZES.items():
        rows = [instance(rng, split, n) for n in range(1, size + 1)]
        write_jsonl(HERE / f"datasets/fn17/{split}.jsonl", rows)


if __name__ == "__main__":
    main()
