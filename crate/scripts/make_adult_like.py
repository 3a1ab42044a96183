#!/usr/bin/env python3
"""Write a deterministic synthetic table shaped like the UCI Adult census data.

Marginals roughly follow the published Adult statistics; dependencies are
limited to income on age, sex and marital status.
"""

import argparse
import csv
import random

MARITAL = [
    ("Married-civ-spouse", 0.46),
    ("Never-married", 0.33),
    ("Divorced", 0.14),
    ("Separated", 0.03),
    ("Widowed", 0.03),
    ("Married-spouse-absent", 0.01),
]
RACE = [
    ("White", 0.85),
    ("Black", 0.09),
    ("Asian-Pac-Islander", 0.03),
    ("Amer-Indian-Eskimo", 0.01),
    ("Other", 0.02),
]
OCCUPATION = [
    "Prof-specialty", "Craft-repair", "Exec-managerial", "Adm-clerical", "Sales",
    "Other-service", "Machine-op-inspct", "Transport-moving", "Handlers-cleaners",
    "Farming-fishing", "Tech-support", "Protective-serv", "Priv-house-serv",
]


def pick(rng, table):
    r = rng.random() * sum(p for _, p in table)
    for value, p in table:
        r -= p
        if r < 0:
            return value
    return table[-1][0]


def row(rng):
    age = min(90, max(17, round(rng.gauss(38.5, 13.5))))
    sex = "Male" if rng.random() < 0.67 else "Female"
    marital = pick(rng, MARITAL)
    if age < 25 and rng.random() < 0.7:
        marital = "Never-married"
    race = pick(rng, RACE)
    occupation = rng.choice(OCCUPATION)
    p_rich = 0.05 + (0.3 if marital == "Married-civ-spouse" else 0.0)
    p_rich += 0.1 if sex == "Male" else 0.0
    p_rich += 0.1 if 35 <= age <= 60 else 0.0
    income = ">50K" if rng.random() < p_rich else "<=50K"
    return [age, marital, race, sex, occupation, income]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="data/adult_sample.csv")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["age", "marital-status", "race", "sex", "occupation", "income"])
        for _ in range(args.rows):
            w.writerow(row(rng))


if __name__ == "__main__":
    main()
