"""Seeded toy-scale experiments: random baseline, band ablation, transfer."""

import numpy as np

from ..attack import AttackConfig, random_sign_perturbation, train_universal
from ..bands import CANONICAL_MASKS, parse_band_spec
from ..jnd import jnd_matrix
from .metrics import fooling_rate, transfer_matrix

ATTACK_IMAGES = 200


def attack_subset(train, n=ATTACK_IMAGES):
    """The first ``n`` training images (the bundled set is already shuffled)."""
    return train.subset(np.arange(min(n, len(train))))


def ftuap(model, train, seed, bands="ff", lam=2.0, epochs=5):
    cfg = AttackConfig(method="ftuap", bands=parse_band_spec(bands), lam=lam, epochs=epochs, seed=seed)
    return train_universal(model, train, cfg)


def random_baseline(model, val, seed, bands="ff", lam=2.0):
    thr = jnd_matrix(lam, mask=parse_band_spec(bands))
    return fooling_rate(model, random_sign_perturbation(thr, model.input_shape, seed), val)


def band_ablation(model, train, val, seeds, masks=CANONICAL_MASKS, epochs=5):
    """Validation fooling rate per band mask and seed: {mask: [fr per seed]}."""
    out = {}
    for name in masks:
        out[name] = [
            fooling_rate(model, ftuap(model, train, s, name, epochs=epochs).perturbation, val).fooling_rate
            for s in seeds
        ]
    return out


def transfer_experiment(models, train, val, seeds, bands="ff", epochs=5):
    """Seed-averaged transfer matrices for FTUAP and the random-sign baseline.

    Returns ``(ftuap_matrix, random_matrix)``; row i is the perturbation
    source (model i for FTUAP), column j the evaluated model.
    """
    ft = np.zeros((len(models), len(models)))
    rnd = np.zeros_like(ft)
    thr = jnd_matrix(2.0, mask=parse_band_spec(bands))
    for s in seeds:
        perts = [ftuap(m, train, s, bands, epochs=epochs).perturbation for m in models]
        ft += transfer_matrix(models, perts, val)
        baseline = [random_sign_perturbation(thr, m.input_shape, 1000 * s + i)
                    for i, m in enumerate(models)]
        rnd += transfer_matrix(models, baseline, val)
    return ft / len(seeds), rnd / len(seeds)
