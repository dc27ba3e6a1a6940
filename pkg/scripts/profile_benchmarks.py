"""Refresh function sizes and profile access counts of the bundled benchmarks.

Function objects are sized to their blocks' code rounded up to a cache line;
``accesses=`` is the access count of each object along the typical trace,
standing in for the compiler's profiling information.
"""

import re
import sys
from pathlib import Path

from spmwcet.experiment import BENCHMARKS
from spmwcet.program import parse_program, validate_program
from spmwcet.sim import access_profile, generate_trace

BENCH_DIR = Path(__file__).resolve().parents[1] / "src" / "spmwcet" / "benchmarks"


def refresh(path: Path) -> str:
    text = path.read_text()
    p = parse_program(text)
    code = {}
    for b in p.blocks.values():
        code[b.owner] = code.get(b.owner, 0) + 2 * b.instr_count
    sizes = {oid: -(-n // 16) * 16 for oid, n in code.items()}
    text = _rewrite(text, sizes, {})
    p = parse_program(text)
    validate_program(p)
    counts = access_profile(p, generate_trace(p, "typical"))
    return _rewrite(text, {}, counts)


def _rewrite(text, sizes, counts):
    out = []
    for line in text.splitlines():
        m = re.match(r"OBJECT (\S+) ", line)
        if m:
            oid = m.group(1)
            if oid in sizes:
                line = re.sub(r"size=\d+", f"size={sizes[oid]}", line)
            if oid in counts:
                line = re.sub(r"accesses=\d+", f"accesses={counts[oid]}", line)
        out.append(line)
    return "\n".join(out) + "\n"


def main(names):
    for name in names or BENCHMARKS:
        path = BENCH_DIR / f"{name}.prog"
        path.write_text(refresh(path))
        print(f"refreshed {path.name}")


if __name__ == "__main__":
    main(sys.argv[1:])
