#!/usr/bin/env python3
"""Write the 20 Newsgroups "bydate" split as lintext tsv files.

    python3 scripts/prepare_20news.py OUT_DIR

Produces OUT_DIR/train.tsv (11,314 documents) and OUT_DIR/test.tsv (7,532).
Uses scikit-learn's fetcher, which downloads the corpus on first use and
caches it under ~/scikit_learn_data. Tabs and newlines inside a message are
replaced by spaces so each document is one line.
"""

import argparse
import pathlib
import re

from sklearn.datasets import fetch_20newsgroups

WS = re.compile(r"[\t\r\n]+")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=pathlib.Path)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for subset in ("train", "test"):
        data = fetch_20newsgroups(subset=subset)
        path = args.out_dir / f"{subset}.tsv"
        with path.open("w", encoding="utf-8") as f:
            for text, target in zip(data.data, data.target):
                f.write(f"{data.target_names[target]}\t{WS.sub(' ', text)}\n")
        print(f"{path}: {len(data.data)} documents")


if __name__ == "__main__":
    main()
