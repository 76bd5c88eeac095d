"""Seeded synthetic census-style dataset for experiments and tests.

UCI files are not bundled or downloaded; this generator produces a dataset
with the same structure (race x gender groups, income label with strongly
group-dependent positive rates and features) so the pipeline and the
experiment harness can run end to end.
"""
from __future__ import annotations

import csv

import numpy as np

SCHEMA = {
    "age": "feature:numeric",
    "education_years": "feature:numeric",
    "hours_per_week": "feature:numeric",
    "capital_score": "feature:numeric",
    "workclass": "feature:categorical",
    "race": "sensitive",
    "gender": "sensitive",
    "income": "label",
}

# P(income > 50K | race, gender), loosely census-like.
POSITIVE_RATES = {
    ("Black", "female"): 0.08,
    ("Black", "male"): 0.22,
    ("White", "female"): 0.12,
    ("White", "male"): 0.32,
}

HEADER = list(SCHEMA)


def generate_rows(n, seed=0):
    """Generate n records as lists of strings matching HEADER."""
    rng = np.random.default_rng(seed)
    races = rng.choice(["Black", "White"], size=n, p=[0.15, 0.85])
    genders = rng.choice(["female", "male"], size=n, p=[0.4, 0.6])
    rates = np.array([POSITIVE_RATES[(r, g)] for r, g in zip(races, genders)])
    y = (rng.random(n) < rates).astype(int)
    male = (genders == "male").astype(float)
    white = (races == "White").astype(float)
    age = 37 + 6 * y + rng.normal(0, 22, n)
    edu = 10 + 3.0 * y + 1.0 * male + 0.6 * white + rng.normal(0, 5.0, n)
    hours = 40 + 7.5 * y + 4 * male + rng.normal(0, 20, n)
    capital = y * rng.normal(2.25, 1.2, n) + rng.normal(0, 2.0, n)
    workclass = rng.choice(["private", "public", "self"], size=n,
                           p=[0.7, 0.2, 0.1])
    rows = []
    for i in range(n):
        rows.append([
            f"{age[i]:.2f}", f"{edu[i]:.2f}", f"{hours[i]:.2f}",
            f"{capital[i]:.3f}", workclass[i], races[i], genders[i],
            ">50K" if y[i] else "<=50K",
        ])
    return rows


def write_csv(path, n, seed=0):
    rows = generate_rows(n, seed)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        writer.writerows(rows)
    return path
