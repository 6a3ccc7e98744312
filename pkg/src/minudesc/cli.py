"""Command line: ``minudesc <command> ...``.

Exit status is 0 on success, 1 for usage errors and 2 for data errors
(unreadable or malformed files, failed extraction, invalid config).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import storage
from .config import load_config
from .errors import MinudescError
from .evaluation import run_experiment
from .imaging import enhance, read_image, to_uint8, write_pgm
from .matching import match, system1, system2, system3
from .subspace import train
from .synth import build_training_set, generate_database, label_jets

log = logging.getLogger("minudesc")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _seeded(cfg, args, key):
    return cfg.with_values(**{key.replace(".", "__"): args.seed}) if args.seed is not None else cfg


def _transform(cfg, args):
    """Load ``--transform`` or, failing that, train one on synthetic fingers."""
    if args.transform:
        return storage.load_transform(args.transform)
    log.info("no --transform given; training on %d synthetic fingers", cfg["subspace.train_fingers"])
    return _train_synthetic(cfg)


def _train_synthetic(cfg):
    pipe = cfg.pipeline()
    data = build_training_set(cfg["subspace.train_fingers"], cfg.synth_params(),
                              cfg["subspace.train_seed"], pipe)
    return train(data, cfg["subspace.pca_dim"], cfg["subspace.lda_dim"])


def cmd_enhance(cfg, args):
    img = read_image(args.image, dpi=args.dpi or cfg["image.dpi"])
    write_pgm(args.output, to_uint8(enhance(img, cfg.enhance_params().scaled(img.dpi))))


def cmd_extract(cfg, args):
    img = read_image(args.image, dpi=args.dpi or cfg["image.dpi"])
    if args.dump_enhanced:
        write_pgm(args.dump_enhanced, to_uint8(enhance(img, cfg.enhance_params().scaled(img.dpi))))
    pipe = cfg.pipeline(_transform(cfg, args))
    t = pipe.template(img)
    storage.save_template(args.output, t)
    log.info("%s: %d minutiae", args.image, len(t.minutiae))


def cmd_train(cfg, args):
    cfg = _seeded(cfg, args, "subspace.train_seed")
    if args.db:
        pipe = cfg.pipeline()
        db = storage.read_database(args.db, dpi=args.dpi or cfg["image.dpi"], ground_truth=True)
        data = label_jets(((fid, img, gt.minutiae) for fid, imps in db for img, gt in imps), pipe)
        t = train(data, cfg["subspace.pca_dim"], cfg["subspace.lda_dim"])
    else:
        t = _train_synthetic(cfg)
    storage.save_transform(args.output, t)


def cmd_match(cfg, args):
    t1 = storage.load_template(args.enroll)
    t2 = storage.load_template(args.test)
    base = cfg.match_params()
    params = {"system1": system1(base), "system2": system2(base),
              "system3": system3(args.pro if args.pro is not None else base.pro, base)}[args.system]
    r = match(t1, t2, params)
    print(f"{float(r.sim1)!r}\t{float(r.sim2)!r}\t{float(r.sim)!r}\t{len(r.pairs)}")


def cmd_eval(cfg, args):
    cfg = _seeded(cfg, args, "subspace.train_seed")
    db = storage.read_database(args.db, dpi=args.dpi or cfg["image.dpi"])
    pipe = cfg.pipeline(_transform(cfg, args))
    report = run_experiment(db, pipe, cfg.match_params(), cfg["eval.pro_sweep"],
                            cfg["eval.far_target"], args.output)
    sys.stdout.write(report.text())


def cmd_synth(cfg, args):
    cfg = _seeded(cfg, args, "synth.seed")
    fingers = args.fingers if args.fingers is not None else cfg["synth.fingers"]
    params = cfg.synth_params()
    db = generate_database(params.seed, fingers, params)
    storage.write_database(args.output, db)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="minudesc", description="Minutia descriptors and two-stage fingerprint matching.")
    p.add_argument("--config", help="config file (default: $MINUDESC_CONFIG or ./minudesc.conf)")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def dpi(sp):
        sp.add_argument("--dpi", type=int, help="image resolution (default: image.dpi)")

    sp = sub.add_parser("enhance", help="write the DOG-filtered, locally normalized image")
    sp.add_argument("image")
    sp.add_argument("-o", "--output", required=True)
    dpi(sp)
    sp.set_defaults(func=cmd_enhance)

    sp = sub.add_parser("extract", help="image -> template file")
    sp.add_argument("image")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--transform", help="subspace transform file (trained on synthetic data if omitted)")
    sp.add_argument("--dump-enhanced", metavar="PATH", help="also write the enhanced image")
    dpi(sp)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("train", help="train the PCA+LDA transform")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--db", help="directory of <finger>_<impression> images with .gt.json files "
                                 "(default: generate synthetic fingers)")
    sp.add_argument("--seed", type=int, help="overrides subspace.train_seed")
    dpi(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("match", help="compare two templates; prints sim1, sim2, sim, pairs")
    sp.add_argument("enroll")
    sp.add_argument("test")
    sp.add_argument("--system", choices=("system1", "system2", "system3"), default="system3")
    sp.add_argument("--pro", type=float, help="reference pair percentage for system3 (default: match.pro)")
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("eval", help="FVC-style evaluation of a database directory")
    sp.add_argument("--db", required=True)
    sp.add_argument("-o", "--output", required=True, help="directory for report.txt, scores.tsv, det.tsv")
    sp.add_argument("--transform", help="subspace transform file (trained on synthetic data if omitted)")
    sp.add_argument("--seed", type=int, help="overrides subspace.train_seed when training")
    dpi(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("synth", help="write a synthetic database")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--fingers", type=int, help="number of fingers (default: synth.fingers)")
    sp.add_argument("--seed", type=int, help="overrides synth.seed")
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        args.func(cfg, args)
    except (MinudescError, OSError) as exc:
        print(f"minudesc: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
