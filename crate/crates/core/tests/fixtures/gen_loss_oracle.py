"""Regenerates loss_oracle.json: random unit embeddings and both contrastive
losses evaluated at 50 significant digits."""

import json

import mpmath
import numpy as np

mpmath.mp.dps = 50


def unit(rng, d):
    v = rng.normal(size=d)
    return (v / np.linalg.norm(v)).tolist()


def cos(x, y):
    x = [mpmath.mpf(a) for a in x]
    y = [mpmath.mpf(a) for a in y]
    dot = mpmath.fsum(a * b for a, b in zip(x, y))
    return dot / (mpmath.sqrt(mpmath.fsum(a * a for a in x)) * mpmath.sqrt(mpmath.fsum(b * b for b in y)))


def stage1(q, p, tau):
    tau = mpmath.mpf(tau)
    total = mpmath.mpf(0)
    for i in range(len(q)):
        num = mpmath.exp(cos(q[i], p[i]) / tau)
        den = num + mpmath.fsum(mpmath.exp(cos(q[i], p[j]) / tau) for j in range(len(p)) if j != i)
        total += mpmath.log(num / den)
    return -total / len(q)


def stage2(p, pos, tau):
    tau = mpmath.mpf(tau)
    total = mpmath.mpf(0)
    for i in range(len(p)):
        num = mpmath.fsum(mpmath.exp(cos(p[i], c) / tau) for c in pos[i])
        neg = mpmath.fsum(mpmath.exp(cos(p[i], c) / tau) for j in range(len(p)) if j != i for c in pos[j])
        total += mpmath.log(num / (num + neg))
    return -total / len(p)


cases = []
for seed in range(100):
    rng = np.random.default_rng(seed)
    b = int(rng.integers(1, 9))
    d = int(rng.integers(2, 17))
    tau = 0.05 if seed % 2 == 0 else float(rng.uniform(0.05, 1.0))
    q = [unit(rng, d) for _ in range(b)]
    p = [unit(rng, d) for _ in range(b)]
    pos = [[unit(rng, d) for _ in range(int(rng.integers(1, 5)))] for _ in range(b)]
    cases.append({
        "seed": seed,
        "tau": tau,
        "queries": q,
        "pseudo": p,
        "positives": pos,
        "stage1": mpmath.nstr(stage1(q, p, tau), 30),
        "stage2": mpmath.nstr(stage2(p, pos, tau), 30),
    })

with open("loss_oracle.json", "w") as f:
    json.dump(cases, f)
