# lphard/commands/__init__.py
"""
Subcommand registration. Each module owns a `router`; main.py installs them
all on one argparse parser.
"""
import argparse
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from ..errors import UsageError
from ..models import RunConfig

Arg = Tuple[Tuple[str, ...], Dict[str, Any]]


def arg(*flags: str, **kwargs: Any) -> Arg:
    return flags, kwargs


@dataclass
class CommandOutput:
    """`text` is what the terminal sees; `payload` feeds JSON output; `table` feeds CSV."""

    text: str
    payload: Dict[str, Any] = field(default_factory=dict)
    table: Optional[Tuple[Sequence[str], List[Sequence[Any]]]] = None


Handler = Callable[[argparse.Namespace, RunConfig], CommandOutput]


@dataclass
class _Command:
    handler: Handler
    args: Tuple[Arg, ...]
    help: str


class CommandRouter:
    def __init__(self, name: str, help: str = "", shared: Sequence[Arg] = ()):
        self.name = name
        self.help = help
        self.shared = tuple(shared)
        self.actions: Dict[str, _Command] = {}

    def command(self, action: str = "", help: str = "", args: Sequence[Arg] = ()):
        def decorator(func: Handler) -> Handler:
            if action in self.actions:
                raise ValueError(f"{self.name} {action!r} registered twice")
            self.actions[action] = _Command(func, tuple(args), help)
            return func
        return decorator

    def install(self, subparsers: Any, parents: Sequence[argparse.ArgumentParser] = ()) -> None:
        if list(self.actions) == [""]:
            cmd = self.actions[""]
            parser = subparsers.add_parser(self.name, help=self.help, parents=list(parents))
            self._add_args(parser, self.shared + cmd.args)
            parser.set_defaults(handler=cmd.handler, action=None)
            return
        parser = subparsers.add_parser(self.name, help=self.help)
        actions = parser.add_subparsers(dest="action", required=True)
        for action, cmd in self.actions.items():
            sub = actions.add_parser(action, help=cmd.help, parents=list(parents))
            self._add_args(sub, self.shared + cmd.args)
            sub.set_defaults(handler=cmd.handler)

    @staticmethod
    def _add_args(parser: argparse.ArgumentParser, args: Sequence[Arg]) -> None:
        for flags, kwargs in args:
            parser.add_argument(*flags, **kwargs)


def read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")


def one_of(args: argparse.Namespace, *names: str) -> str:
    """Exactly one of the named options must be set; returns its name."""
    given = [n for n in names if getattr(args, n) not in (None, False)]
    if len(given) != 1:
        flags = ", ".join("--" + n.replace("_", "-") for n in names)
        raise UsageError(f"give exactly one of {flags}")
    return given[0]


def rational(text: str) -> Fraction:
    """argparse type for exact numbers: '3', '1/2', '0.25'."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational number")
