#!/usr/bin/env python3
"""Generates the bundled converter mini-fixtures.

Writes referring_mini.jsonl, panoptic_mini.jsonl, and gcg_mini.jsonl into
testdata/, ten images each. Masks are stored as plain column-major RLE count
arrays (leading zero run), computed here from rectangles without touching the
C++ codec. Deterministic: fixed seed, no external inputs.
"""

import json
import random
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "testdata"


def rect_mask(h, w, r0, r1, c0, c1):
    """Inclusive rectangle bounds -> {size, counts} in column-major order."""
    px = [
        1 if (r0 <= r <= r1 and c0 <= c <= c1) else 0
        for c in range(w)
        for r in range(h)
    ]
    counts, cur, run = [], 0, 0
    for v in px:
        if v == cur:
            run += 1
        else:
            counts.append(run)
            cur, run = v, 1
    counts.append(run)
    return {"size": [h, w], "counts": counts}


def random_rect(rng, h, w):
    r0 = rng.randrange(0, h - 2)
    r1 = rng.randrange(r0 + 1, h)
    c0 = rng.randrange(0, w - 2)
    c1 = rng.randrange(c0 + 1, w)
    return r0, r1, c0, c1


def dims_for(i):
    return 16 + (i % 3) * 8, 24 + (i % 2) * 8


def write_jsonl(name, records):
    path = OUT_DIR / name
    with path.open("w", encoding="utf-8") as out:
        for record in records:
            out.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"wrote {path} ({len(records)} images)")


def make_referring(rng):
    expressions = [
        "red ball",
        "left chair",
        "tall lamp",
        "open door",
        "striped rug",
        "small plant",
        "wall clock",
        "wooden table",
    ]
    records = []
    for i in range(10):
        h, w = dims_for(i)
        # image 7 carries no referents to exercise the absence response
        count = 0 if i == 7 else 1 + rng.randrange(3)
        referents = []
        for expr in rng.sample(expressions, count):
            referents.append(
                {"expression": expr, "rle": rect_mask(h, w, *random_rect(rng, h, w))}
            )
        records.append(
            {
                "image_id": f"ref-{i}",
                "image_path": f"/data/ref-{i}.jpg",
                "height": h,
                "width": w,
                "referents": referents,
            }
        )
    return records


def make_panoptic(rng):
    categories = ["sky", "tree", "road", "car", "building", "person"]
    records = []
    for i in range(10):
        h, w = dims_for(i)
        count = 1 + rng.randrange(4)
        segments = []
        for _ in range(count):
            segments.append(
                {
                    "category": rng.choice(categories),
                    "rle": rect_mask(h, w, *random_rect(rng, h, w)),
                }
            )
        records.append(
            {
                "image_id": f"pan-{i}",
                "image_path": f"/data/pan-{i}.jpg",
                "height": h,
                "width": w,
                "segments": segments,
            }
        )
    return records


def make_gcg(rng):
    nouns = ["dog", "ball", "bench", "kite", "bicycle", "fountain"]
    records = []
    for i in range(10):
        h, w = dims_for(i)
        # image 4 is caption-only
        count = 0 if i == 4 else 1 + rng.randrange(3)
        chosen = rng.sample(nouns, max(count, 1))
        caption = f"A {chosen[0]}"
        groundings = []
        if count >= 1:
            begin = caption.index(chosen[0])
            groundings.append({"begin": begin, "end": begin + len(chosen[0])})
        for noun in chosen[1:count]:
            connector = rng.choice([" beside the ", " chasing a ", " near the "])
            caption += connector
            begin = len(caption)
            caption += noun
            groundings.append({"begin": begin, "end": begin + len(noun)})
        caption += " in the park."
        for g in groundings:
            g["rle"] = rect_mask(h, w, *random_rect(rng, h, w))
        records.append(
            {
                "image_id": f"gcg-{i}",
                "image_path": f"/data/gcg-{i}.jpg",
                "height": h,
                "width": w,
                "caption": caption,
                "groundings": groundings,
            }
        )
    return records


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20260814)
    write_jsonl("referring_mini.jsonl", make_referring(rng))
    write_jsonl("panoptic_mini.jsonl", make_panoptic(rng))
    write_jsonl("gcg_mini.jsonl", make_gcg(rng))


if __name__ == "__main__":
    main()
