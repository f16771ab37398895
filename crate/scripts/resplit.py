#!/usr/bin/env python3
"""Re-partition a full fact set into train/valid/test with fixed split sizes.

Usage: resplit.py SRC_DIR OUT_DIR N_TRAIN N_VALID N_TEST [SEED]

SRC_DIR must contain train.txt/valid.txt/test.txt (any partition); all facts
are pooled, shuffled with SEED, and re-split. The train split is seeded first
with one fact per uncovered entity/relation so every name appears in train.
"""
import random
import sys
from pathlib import Path


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    n_train, n_valid, n_test = map(int, sys.argv[3:6])
    seed = int(sys.argv[6]) if len(sys.argv) > 6 else 0

    facts = []
    for split in ("train.txt", "valid.txt", "test.txt"):
        for line in (src / split).read_text(encoding="utf-8").splitlines():
            if line.strip():
                facts.append(tuple(line.split("\t")))
    facts = sorted(set(facts))
    assert len(facts) == n_train + n_valid + n_test, len(facts)

    rng = random.Random(seed)
    rng.shuffle(facts)

    seen_e, seen_r, train, rest = set(), set(), [], []
    for h, r, t in facts:
        if h not in seen_e or t not in seen_e or r not in seen_r:
            train.append((h, r, t))
            seen_e.update((h, t))
            seen_r.add(r)
        else:
            rest.append((h, r, t))
    assert len(train) <= n_train
    need = n_train - len(train)
    train += rest[:need]
    rest = rest[need:]
    rng.shuffle(train)
    valid, test = rest[:n_valid], rest[n_valid:]

    out.mkdir(parents=True, exist_ok=True)
    for name, rows in (("train.txt", train), ("valid.txt", valid), ("test.txt", test)):
        (out / name).write_text("".join(f"{h}\t{r}\t{t}\n" for h, r, t in rows), encoding="utf-8")


if __name__ == "__main__":
    main()
