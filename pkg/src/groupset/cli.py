"""Command-line interface.

JSON goes to stdout, human diagnostics to stderr. Exit codes: 0 success,
1 usage error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import analysis, session as session_mod, variants
from .session import RuleViolation, SessionError
from .variants import UnknownVariantError


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _emit(data) -> None:
    json.dump(data, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _variant(variant_id: str) -> variants.VariantSpec:
    try:
        return variants.variant_by_id(variant_id)
    except UnknownVariantError:
        print(f"error: unknown variant {variant_id!r}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="groupset", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-variants", help="catalog of playable variants")

    p = sub.add_parser("dump-deck", help="all cards of a variant as JSON")
    p.add_argument("--variant", required=True)

    p = sub.add_parser("find-sets", help="enumerate sets on a given table")
    p.add_argument("--variant", required=True)
    p.add_argument("--cards", required=True, help="comma-separated card ids")

    p = sub.add_parser("analyze", help="Monte Carlo set-existence probability")
    p.add_argument("--variant", required=True)
    p.add_argument("--table-size", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("cap-search", help="search for a set-free table")
    p.add_argument("--variant", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--budget", type=int, default=analysis.DEFAULT_NODE_BUDGET)

    p = sub.add_parser("threshold", help="guarantee threshold for a variant")
    p.add_argument("--variant", required=True)
    p.add_argument("--max-size", type=int, default=None)
    p.add_argument("--budget", type=int, default=10**6)

    p = sub.add_parser("verify", help="re-derive and check every design fact")
    p.add_argument("--trials", type=int, default=analysis.PROBABILITY_FACT_TRIALS,
                   help="Monte Carlo trials for the probability fact")

    p = sub.add_parser("play", help="interactive terminal session")
    p.add_argument("--variant", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--player", default="you")
    p.add_argument("--mode", choices=("free", "strict"), default="free")

    p = sub.add_parser("serve", help="run the HTTP/JSON service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--state-dir", default=None,
                   help="session log directory (default $GROUPSET_STATE_DIR or ./groupset-state)")
    p.add_argument("--workers", type=int, default=2, help="analysis worker slots")
    p.add_argument("--ui", default=None, help="directory of built web UI to serve")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except SystemExit:
        raise
    except (analysis.AnalysisError, SessionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "list-variants":
        _emit({"variants": [variants.variant_to_jsonable(v) for v in variants.catalog()]})
        return 0

    if args.command == "dump-deck":
        variant = _variant(args.variant)
        deck = variants.build_deck(variant)
        _emit({
            "variant": variants.variant_to_jsonable(variant),
            "cards": [variants.card_to_jsonable(c) for c in deck.cards],
        })
        return 0

    if args.command == "find-sets":
        variant = _variant(args.variant)
        try:
            table = [int(c) for c in args.cards.split(",") if c.strip() != ""]
        except ValueError:
            print("error: --cards must be comma-separated integers", file=sys.stderr)
            return 1
        _emit(analysis.find_sets(variant, table).to_jsonable())
        return 0

    if args.command == "analyze":
        variant = _variant(args.variant)
        estimate = analysis.set_probability(variant, args.table_size, args.trials, args.seed)
        _emit(estimate.to_jsonable())
        return 0

    if args.command == "cap-search":
        variant = _variant(args.variant)
        _emit(analysis.cap_search(variant, args.size, args.budget).to_jsonable())
        return 0

    if args.command == "threshold":
        variant = _variant(args.variant)
        _emit(analysis.guarantee_threshold(variant, args.max_size, args.budget).to_jsonable())
        return 0

    if args.command == "verify":
        report = analysis.verify_paper_facts(probability_trials=args.trials)
        _emit(report.to_jsonable())
        for fact in report.facts:
            mark = "PASS" if fact.passed else "FAIL"
            print(f"[{mark}] {fact.fact_id}: {fact.detail}", file=sys.stderr)
        return 0 if report.all_passed else 2

    if args.command == "play":
        return _play(args)

    if args.command == "serve":
        from .service import serve

        state_dir = args.state_dir or os.environ.get("GROUPSET_STATE_DIR", "groupset-state")
        serve(args.port, state_dir, host=args.host,
              analysis_workers=args.workers, ui_dir=args.ui)
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


# -- interactive play ----------------------------------------------------------

def _card_line(variant, card_id: int) -> str:
    card = variants.build_deck(variant).card(card_id)
    values = card.features.values
    scheme = card.features.scheme
    if scheme == "set4":
        text = (
            f"{values['number']} x {variants.SET_SHAPES[values['shape']]}"
            f" {variants.SET_COLORS[values['color']]}"
            f" {variants.SET_SHADINGS[values['shading']]}"
        )
    elif scheme == "socks6":
        text = "socks: " + (", ".join(values["colors"]) or "none")
    elif scheme == "quads3":
        text = (
            f"{values['count']} x {variants.QUAD_SHAPES[values['shape']]}"
            f" {variants.QUAD_COLORS[values['color']]}"
        )
    elif scheme == "pentagons3":
        text = "pentagons " + "-".join(str(d) for d in values["directions"])
    elif scheme == "octa":
        text = (
            f"faces {values['octahedron_faces']} spiral {values['spiral']}"
            f" | cube {values['cube_faces']} hollow {values['hollow']}"
        )
    else:
        text = " | ".join(
            f"wires {p['images']}" + (f" beads {p['beads']}" if p["beads"] else "")
            for p in values["panels"]
        )
    return f"[{card_id:>3}] {text}"


def _play(args) -> int:
    variant = _variant(args.variant)
    game = session_mod.new_session(variant, args.seed, [args.player], mode=args.mode)
    print(f"playing {variant.display_name}; commands: claim <ids>, hint, deal, state, quit",
          file=sys.stderr)
    while True:
        print(f"\npile {len(game.draw_pile)} | score {game.scores[args.player]} | "
              f"status {game.status}", file=sys.stderr)
        for card_id in game.table:
            print(_card_line(variant, card_id), file=sys.stderr)
        if game.status == "finished":
            print("game over", file=sys.stderr)
            _emit(game.state_snapshot())
            return 0
        try:
            line = input("> ").strip()
        except EOFError:
            _emit(game.state_snapshot())
            return 0
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "quit":
                _emit(game.state_snapshot())
                return 0
            if parts[0] == "hint":
                found = game.hint()
                print(f"hint: {list(found) if found else 'no set - deal more'}",
                      file=sys.stderr)
            elif parts[0] == "deal":
                result = game.deal_extra()
                print(f"dealt {result.dealt}", file=sys.stderr)
                if result.warning:
                    print(f"warning: {result.warning}", file=sys.stderr)
            elif parts[0] == "state":
                _emit(game.state_snapshot())
            elif parts[0] == "claim":
                cards = [int(c) for c in parts[1:]]
                result = game.claim_set(args.player, cards)
                if result.accepted:
                    print(f"accepted! +{result.points} (score {result.score})",
                          file=sys.stderr)
                else:
                    extra = " (a different order works)" if result.reorder_hint else ""
                    print(f"rejected: {result.reason}{extra}", file=sys.stderr)
            else:
                print("commands: claim <ids>, hint, deal, state, quit", file=sys.stderr)
        except (SessionError, RuleViolation, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)


if __name__ == "__main__":
    raise SystemExit(main())
