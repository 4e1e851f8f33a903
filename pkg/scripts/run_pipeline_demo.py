#!/usr/bin/env python3
"""End-to-end CLI demo on synthetic data: validate -> eval -> detect ->
zscore -> cluster -> trend, leaving every artifact in --work-dir."""

import argparse
import subprocess
import sys
from pathlib import Path

SCRIPTS = Path(__file__).parent


def sh(*argv):
    print("+", " ".join(str(a) for a in argv))
    subprocess.run([str(a) for a in argv], check=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--work-dir", type=Path, default=Path("demo_run"))
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    work = args.work_dir
    corpus = work / "corpus"
    sh(sys.executable, SCRIPTS / "make_synthetic_corpus.py", "--out-dir", corpus,
       "--seed", args.seed)
    chars = corpus / "characters.jsonl"
    emb = corpus / "embeddings.cemb"

    sh("archlens", "validate", "--characters", chars, "--embeddings", emb)
    sh("archlens", "eval", "--characters", chars, "--embeddings", emb,
       "--features", "emb", "--model", "svm", "--scheme", "stratified:5",
       "--seed", args.seed, "--out-dir", work / "eval")
    sh("archlens", "detect", "--train-characters", chars, "--train-embeddings", emb,
       "--corpus-characters", chars, "--corpus-embeddings", emb,
       "--seed", args.seed, "--out-dir", work / "detect")
    sh("archlens", "zscore", "--characters", chars,
       "--out", work / "zscore.csv", "--svg", work / "zscore.svg")
    sh("archlens", "cluster", "--characters", chars, "--embeddings", emb,
       "--seed", args.seed, "--out-dir", work / "cluster",
       "--svg", work / "clusters.svg")
    sh("archlens", "trend", "--series", work / "detect" / "centrality_series.csv",
       "--out", work / "centrality_fit.csv", "--svg", work / "centrality_fit.svg")
    print(f"\nall artifacts under {work}/")


if __name__ == "__main__":
    main()
