"""Regenerate the vendored benchmark CSVs under data/.

Sources (no network fetch of the raw UCI files is needed):
  iris     - scikit-learn's bundled copy of the UCI Iris data
  heart    - Orange3's bundled Cleveland heart-disease table (303 rows)
  wordsim  - gensim's bundled WordSimilarity-353 test collection

Usage: python3 scripts/make_fixtures.py <orange3.whl> <gensim.whl>
"""
import csv
import io
import os
import statistics
import sys
import zipfile

from sklearn.datasets import load_iris

OUT = os.path.join(os.path.dirname(__file__), "..", "data")


def write(name, header, rows):
    with open(os.path.join(OUT, name), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def iris():
    d = load_iris()
    rows = [[f"{v:.1f}" for v in x] + [str(int(y))] for x, y in zip(d.data, d.target)]
    write("iris.csv", ["sepal_length", "sepal_width", "petal_length", "petal_width", "class"], rows)


# Cleveland codes as distributed in processed.cleveland.data
HEART_CODES = {
    "gender": {"female": 0, "male": 1},
    "chest pain": {"typical ang": 1, "atypical ang": 2, "non-anginal": 3, "asymptomatic": 4},
    "rest ECG": {"normal": 0, "ST-T abnormal": 1, "left vent hypertrophy": 2},
    "slope peak exc ST": {"upsloping": 1, "flat": 2, "downsloping": 3},
    "thal": {"normal": 3, "fixed defect": 6, "reversable defect": 7},
}


def heart(whl):
    text = zipfile.ZipFile(whl).read("Orange/datasets/heart_disease.tab").decode()
    lines = text.splitlines()
    header = lines[0].split("\t")
    body = [l.split("\t") for l in lines[3:] if l.strip()]
    cols = []
    for j, name in enumerate(header):
        raw = [r[j] for r in body]
        codes = HEART_CODES.get(name)
        vals = [None if v in ("", "?") else float(codes[v] if codes else v) for v in raw]
        present = [v for v in vals if v is not None]
        fill = statistics.mode(present)
        cols.append([fill if v is None else v for v in vals])
    rows = [[f"{c[i]:g}" for c in cols] for i in range(len(body))]
    names = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach",
             "exang", "oldpeak", "slope", "ca", "thal", "target"]
    write("heart.csv", names, rows)


def wordsim(whl):
    text = zipfile.ZipFile(whl).read("gensim/test/test_data/wordsim353.tsv").decode()
    rows = []
    for line in text.splitlines():
        if line.startswith("#") or not line.strip():
            continue
        _, _, score = line.split("\t")
        rows.append([str(len(rows) + 1), score])
    write("wordsim.csv", ["pair_index", "mean_score"], rows)


if __name__ == "__main__":
    iris()
    heart(sys.argv[1])
    wordsim(sys.argv[2])
