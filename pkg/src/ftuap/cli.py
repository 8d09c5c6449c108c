"""Command-line entry point: ``ftuap <subcommand> ...``."""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import attack as atk
from .bands import CANONICAL_MASKS, parse_band_spec
from .harness import experiments
from .harness.formats import load_model, load_perturbation, save_model, save_perturbation
from .harness.histograms import band_histogram, spatial_histogram, write_histogram
from .harness.imageio import load_dataset, load_image, save_dataset, save_image
from .harness.metrics import fooling_rate, transfer_matrix
from .jnd import ViewingConditions, format_table, jnd_matrix, pixel_angle, to_csv_rows
from .tinynet import data as toy
from .tinynet.train import DEFAULT_CONFIGS, TrainConfig, accuracy, train

log = logging.getLogger("ftuap")


def _emit(args, record):
    """Append one JSON line to --report (if given) and echo it to stdout."""
    line = json.dumps(record, sort_keys=True)
    if getattr(args, "report", None):
        with open(args.report, "a") as fh:
            fh.write(line + "\n")
    print(line)


def _splits(args):
    if args.data:
        return load_dataset(args.data, "train"), load_dataset(args.data, "validation")
    return toy.bundled_splits(42)


def cmd_gen_dataset(args):
    train_ds = toy.make_dataset(args.train_size, args.seed, "train")
    val_ds = toy.make_dataset(args.val_size, args.seed + 1_000_003, "validation")
    save_dataset(args.out, {"train": train_ds, "validation": val_ds}, plain=args.plain)
    print(f"wrote {len(train_ds)} train / {len(val_ds)} validation images to {args.out}")
    _emit(args, {"command": "gen-dataset", "seed": args.seed, "train": len(train_ds),
                 "validation": len(val_ds), "out": str(args.out)})


def cmd_train_classifier(args):
    train_ds, val_ds = _splits(args)
    base = DEFAULT_CONFIGS[args.arch]
    cfg = TrainConfig(
        arch=args.arch,
        epochs=args.epochs if args.epochs is not None else base.epochs,
        learning_rate=args.lr if args.lr is not None else base.learning_rate,
        batch_size=base.batch_size, seed=args.seed, width=base.width, noise_std=base.noise_std,
    )
    model = train(train_ds, cfg)
    save_model(model, args.out)
    tr, va = accuracy(model, train_ds), accuracy(model, val_ds)
    print(f"arch {args.arch}: train top-1 {tr:.4f}, validation top-1 {va:.4f} -> {args.out}")
    _emit(args, {"command": "train-classifier", "arch": args.arch, "seed": args.seed,
                 "train_top1": tr, "val_top1": va, "out": str(args.out)})


def cmd_attack(args):
    model = load_model(args.model)
    data = load_dataset(args.data, args.split) if args.data else toy.bundled_splits(42)[0]
    if args.max_images:
        data = data.subset(np.arange(min(args.max_images, len(data))))
    cfg = atk.AttackConfig(
        method=args.method, bands=parse_band_spec(args.bands), epsilon=args.epsilon,
        lam=args.lam, epochs=args.epochs, overshoot=args.overshoot,
        max_inner_iters=args.max_inner_iters, inner=args.inner, seed=args.seed,
    )
    result = atk.train_universal(model, data, cfg)
    save_perturbation(result.perturbation, args.out)
    trace = ", ".join(f"{fr:.3f}" for fr in result.fooling_trace)
    print(f"{args.method} ({cfg.bands.name if args.method == 'ftuap' else 'spatial'}) "
          f"train fooling rate per epoch: [{trace}] -> {args.out}")
    _emit(args, {"command": "attack", "config": cfg.describe(), "digest": cfg.digest(),
                 "train_fooling_trace": result.fooling_trace, "out": str(args.out)})


def cmd_eval(args):
    model = load_model(args.model)
    pert = load_perturbation(args.pert)
    data = load_dataset(args.data, args.split) if args.data else toy.bundled_splits(42)[1]
    rep = fooling_rate(model, pert, data)
    if args.pairs:
        with open(args.pairs, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "clean_label", "perturbed_label", "clean_conf", "perturbed_conf"])
            for i, pair in enumerate(rep.pairs):
                w.writerow([i, pair[0], pair[1], repr(pair[2]), repr(pair[3])])
    print(rep.summary())
    _emit(args, {"command": "eval", "model": str(args.model), "pert": str(args.pert), **rep.as_dict()})


def cmd_transfer(args):
    if len(args.model) != len(args.pert):
        raise SystemExit("give one --pert per --model")
    models = [load_model(m) for m in args.model]
    perts = [load_perturbation(p) for p in args.pert]
    data = load_dataset(args.data, args.split) if args.data else toy.bundled_splits(42)[1]
    mat = transfer_matrix(models, perts, data)
    names = [Path(m).stem for m in args.model]
    width = max(len(n) for n in names) + 2
    print("source \\ target".ljust(width) + "".join(n.rjust(width) for n in names))
    for name, row in zip(names, mat):
        print(name.ljust(width) + "".join(f"{v:{width}.4f}" for v in row))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["source"] + names)
            for name, row in zip(names, mat):
                w.writerow([name] + [repr(float(v)) for v in row])
    _emit(args, {"command": "transfer", "models": names, "matrix": mat.tolist()})


def cmd_apply(args):
    pert = load_perturbation(args.pert)
    out = atk.apply(pert, load_image(args.image))
    save_image(args.out, out)
    print(f"wrote {args.out}")


def cmd_histogram(args):
    pert = load_perturbation(args.pert)
    if args.domain == "spatial":
        spec = spatial_histogram(pert, args.bins)
    elif args.domain.startswith("band:"):
        k1, k2 = (int(v) for v in args.domain[5:].split(","))
        spec = band_histogram(pert, k1, k2, args.bins)
    else:
        raise SystemExit(f"unknown domain {args.domain!r}")
    csv_path, side = write_histogram(spec, args.out, perturbation=args.pert, seed=args.seed)
    print(f"{spec.domain}: {spec.total} values, std {spec.std:.5f} -> {csv_path}, {side}")


def cmd_jnd_table(args):
    angle = args.pixel_angle or pixel_angle(args.viewing_distance, args.pixels_per_cm)
    vc = ViewingConditions(l_min=args.l_min, l_max=args.l_max, pixel_angle_x=angle,
                           pixel_angle_y=angle, bit_scale=args.bit_scale)
    mask = parse_band_spec(args.bands) if args.bands else None
    thr = jnd_matrix(args.lam, vc, mask=mask)
    print(f"# JND thresholds, lambda={args.lam}, pixel angle={angle:.6f} deg"
          + (f", bands={mask.name}" if mask else ""))
    print(format_table(thr))
    print()
    w = csv.writer(sys.stdout)
    for row in thr.thresholds:
        w.writerow([f"{v:.4f}" for v in row])
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            csv.writer(fh).writerows(to_csv_rows(thr))


def cmd_ablation(args):
    model = load_model(args.model)
    train_ds, val_ds = _splits(args)
    seeds = list(range(args.seed, args.seed + args.repeats))
    sub = experiments.attack_subset(train_ds, args.max_images)
    res = experiments.band_ablation(model, sub, val_ds, seeds, args.masks)
    for name, frs in res.items():
        print(f"{name:>4}: mean fooling rate {np.mean(frs):.4f}  per seed {np.round(frs, 4).tolist()}")
        _emit(args, {"command": "ablation", "bands": name, "seeds": seeds, "fooling_rates": frs})


def build_parser():
    p = argparse.ArgumentParser(prog="ftuap", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--report", help="append a JSON-lines record to this file")
        sp.set_defaults(func=fn)
        return sp

    sp = add("gen-dataset", cmd_gen_dataset, "write the procedural toy dataset as PGM files")
    sp.add_argument("--out", required=True)
    sp.add_argument("--train-size", type=int, default=toy.TRAIN_SIZE)
    sp.add_argument("--val-size", type=int, default=toy.VAL_SIZE)
    sp.add_argument("--plain", action="store_true", help="ASCII (P2/P3) instead of binary")
    sp.set_defaults(seed=42)

    sp = add("train-classifier", cmd_train_classifier, "train a toy classifier")
    sp.add_argument("--arch", choices=["a", "b"], required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--data", help="dataset directory (default: bundled generator)")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--lr", type=float)
    sp.set_defaults(seed=42)

    sp = add("attack", cmd_attack, "train a universal perturbation")
    sp.add_argument("--method", choices=["uap", "ftuap"], default="ftuap")
    sp.add_argument("--bands", default="ff", help="lf|mf|hf|lmf|lhf|mhf|ff|custom:<i,j,...>")
    sp.add_argument("--epsilon", type=float, default=10.0)
    sp.add_argument("--lambda", dest="lam", type=float, default=2.0)
    sp.add_argument("--epochs", type=int, default=5)
    sp.add_argument("--overshoot", type=float, default=0.02)
    sp.add_argument("--max-inner-iters", type=int, default=50)
    sp.add_argument("--inner", choices=["deepfool", "sign"], default="deepfool")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data")
    sp.add_argument("--split", default="train")
    sp.add_argument("--max-images", type=int, default=experiments.ATTACK_IMAGES)
    sp.add_argument("--out", required=True)

    sp = add("eval", cmd_eval, "fooling rate and top-1 accuracy of a perturbation")
    sp.add_argument("--model", required=True)
    sp.add_argument("--pert", required=True)
    sp.add_argument("--data")
    sp.add_argument("--split", default="validation")
    sp.add_argument("--pairs", help="write per-image prediction pairs as CSV")

    sp = add("transfer", cmd_transfer, "cross-model fooling-rate matrix")
    sp.add_argument("--model", action="append", required=True)
    sp.add_argument("--pert", action="append", required=True)
    sp.add_argument("--data")
    sp.add_argument("--split", default="validation")
    sp.add_argument("--csv")

    sp = add("apply", cmd_apply, "add a perturbation to an image file")
    sp.add_argument("--pert", required=True)
    sp.add_argument("--image", required=True)
    sp.add_argument("--out", required=True)

    sp = add("histogram", cmd_histogram, "histogram of perturbation values")
    sp.add_argument("--pert", required=True)
    sp.add_argument("--domain", default="spatial", help="spatial or band:K1,K2")
    sp.add_argument("--bins", type=int, default=51)
    sp.add_argument("--out", required=True)

    sp = add("jnd-table", cmd_jnd_table, "print the 8x8 JND threshold matrix")
    sp.add_argument("--lambda", dest="lam", type=float, default=2.0)
    sp.add_argument("--l-min", type=float, default=0.0)
    sp.add_argument("--l-max", type=float, default=175.0)
    sp.add_argument("--bit-scale", type=float, default=255.0)
    sp.add_argument("--viewing-distance", type=float, default=60.0, help="cm")
    sp.add_argument("--pixels-per-cm", type=float, default=31.5)
    sp.add_argument("--pixel-angle", type=float, help="degrees; overrides the geometry")
    sp.add_argument("--bands")
    sp.add_argument("--csv", help="also write k1,k2,threshold rows to this file")

    sp = add("ablation", cmd_ablation, "FTUAP fooling rate per band mask")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data")
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--max-images", type=int, default=experiments.ATTACK_IMAGES)
    sp.add_argument("--masks", nargs="+", default=list(CANONICAL_MASKS))
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
