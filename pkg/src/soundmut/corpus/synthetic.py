"""Random but well-formed AppLang programs for throughput tests.

Programs are assembled from the same building blocks as the fixtures
(lifecycle callbacks, layout bindings, dynamic listeners and receivers,
async closures, nested classes, dead branches), so every generated program
parses, validates and stays within a few events of full coverage.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass(frozen=True)
class SyntheticSpec:
    helpers: tuple[int, int] = (2, 5)  # min/max helper methods per activity
    dead: tuple[int, int] = (1, 3)  # uncalled methods
    p_listener: float = 0.7
    p_receiver: float = 0.6
    p_closure: float = 0.6
    p_inner: float = 0.6
    p_static_receiver: float = 0.4


def _block(lines: list[str], depth: int) -> str:
    pad = "  " * depth
    return "".join(f"{pad}{ln}\n" for entry in lines for ln in entry.splitlines())


def generate_program(rng: random.Random, name: str = "app", spec: SyntheticSpec = SyntheticSpec()) -> dict[str, str]:
    """One program as ``{unit: text}``."""
    act = "Main"
    n_help = rng.randint(*spec.helpers)
    n_dead = rng.randint(*spec.dead)
    helpers = [f"helper{i}" for i in range(n_help)]
    create: list[str] = []
    start: list[str] = []
    resume: list[str] = []
    members: list[str] = ['var state = "";']

    # helpers form a chain called from random lifecycle callbacks
    for i, h in enumerate(helpers):
        body = ["var t = v;"]
        if i + 1 < n_help and rng.random() < 0.5:
            body.append(f'this.{helpers[i + 1]}(t);')
        members.append(f"{h}(v) {{\n" + _block(body, 1) + "}")
        rng.choice([create, start, resume]).append(f'this.{h}("{name}");')
    for i in range(n_dead):
        members.append(f"dead{i}() {{\n" + _block(['var gone = "x";'], 1) + "}")
    if rng.random() < 0.5:
        resume.append("if (false) {\n" + _block(["this.dead0();"], 1) + "}")

    layout = ""
    uses = ""
    if rng.random() < spec.p_listener:
        layout = f'layout {name}Screen {{\n  button tap onClick = "onTap";\n  button more;\n}}\n\n'
        uses = f" uses {name}Screen"
        members.append("onTap() {\n" + _block(['state = "tapped";'], 1) + "}")
        create.append("setOnClick(more, new listener {\n"
                      + _block(["callback onClick() {", f'  this.{helpers[0]}("click");', "}"], 1) + "});")
    if rng.random() < spec.p_receiver:
        create.append("registerReceiver(new receiver {\n"
                      + _block(["callback onReceive() {", '  var got = "msg";', "}"], 1) + '}, "PING");')
    if rng.random() < spec.p_closure:
        api = rng.choice(["submit", "runOnUi", "startThread"])
        create.append(f"{api}(new class {{\n"
                      + _block(["callback run() {", f'  this.{helpers[-1]}("async");', "}"], 1) + "});")
    if rng.random() < spec.p_inner:
        members.append("class Worker {\n" + _block(["work() {", '  state = "worker";', "}"], 1) + "}")
        create.append("Worker.work();")
    members.append("callback onCreate() {\n" + _block(create, 1) + "}")
    members.append("callback onStart() {\n" + _block(start, 1) + "}")
    members.append("callback onResume() {\n" + _block(resume, 1) + "}")

    receivers = ""
    manifest_rx = ""
    if rng.random() < spec.p_static_receiver:
        manifest_rx = '  receiver Boot on "BOOT";\n'
        receivers = "\nreceiver Boot {\n  callback onReceive() {\n    var booted = \"yes\";\n  }\n}\n"
    body = _block(members, 1)
    text = (f"manifest {{\n  entry {act};\n  activity {act};\n{manifest_rx}}}\n\n{layout}"
            f"activity {act}{uses} {{\n{body}}}\n{receivers}")
    return {f"{name}.al": text}


def generate_corpus(n: int, seed: int = 0, spec: SyntheticSpec = SyntheticSpec()) -> dict[str, dict[str, str]]:
    """``n`` programs keyed ``syn000``...; the same seed always gives the same corpus."""
    rng = random.Random(seed)
    return {f"syn{i:03d}": generate_program(rng, f"syn{i:03d}", spec) for i in range(n)}
