"""Timed memory regions, object placement and aiT-style MEMORY_AREA annotations."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .program import AccessEvent, ObjectKind, Program

SCRATCHPAD = "scratchpad"
MAIN = "main"

# total cycles per access (access + waitstates), keyed by access width in bits
MAIN_TIMING = {8: 2, 16: 2, 32: 4}
SPM_TIMING = {8: 1, 16: 1, 32: 1}

READ_ONLY = "READ-ONLY"
READ_WRITE = "READ&WRITE"
CODE_ONLY = "CODE-ONLY"
DATA_ONLY = "DATA-ONLY"
CODE_DATA = "CODE&DATA"

_ACCESS_ALIASES = {"READ-ONLY": READ_ONLY, "READONLY": READ_ONLY,
                   "READ&WRITE": READ_WRITE, "READWRITE": READ_WRITE, "READ-WRITE": READ_WRITE}
_CONTENTS = (CODE_ONLY, DATA_ONLY, CODE_DATA)


class LayoutError(ValueError):
    pass


class AnnotationParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def default_timing(region_kind: str) -> dict:
    if region_kind == SCRATCHPAD:
        return dict(SPM_TIMING)
    if region_kind == MAIN:
        return dict(MAIN_TIMING)
    raise ValueError(f"unknown region kind {region_kind!r}")


@dataclass(frozen=True)
class MemoryRegion:
    name: str
    base: int
    limit: int  # inclusive
    cycles_by_width: Mapping
    access: str = READ_WRITE
    contents: str = CODE_DATA
    clock_ratio: str = "1:1"

    def __post_init__(self):
        if self.base > self.limit:
            raise LayoutError(f"region {self.name!r}: base above limit")
        if any(c < 1 for c in self.cycles_by_width.values()):
            raise LayoutError(f"region {self.name!r}: cycles must be >= 1")

    @property
    def allows_code(self) -> bool:
        return self.contents != DATA_ONLY

    @property
    def allows_data(self) -> bool:
        return self.contents != CODE_ONLY

    @property
    def uniform_cycles(self) -> int:
        values = set(self.cycles_by_width.values())
        if len(values) != 1:
            raise ValueError(f"region {self.name!r} has width-dependent timing")
        return values.pop()

    def contains(self, start: int, size: int) -> bool:
        return self.base <= start and start + size - 1 <= self.limit


@dataclass(frozen=True)
class LayoutConfig:
    main_base: int = 0x00100000
    main_size: int = 0x00100000
    spm_base: int = 0x00400000
    spm_capacity: int = 0
    alignment: int = 4


@dataclass(frozen=True)
class MemoryLayout:
    regions: tuple
    placement: Mapping  # object id -> (region name, start address)
    spm_region: str | None = None
    objects: Mapping = field(default_factory=dict, compare=False)

    def region(self, name: str) -> MemoryRegion:
        for r in self.regions:
            if r.name == name:
                return r
        raise KeyError(name)

    def region_of(self, obj_id: str) -> MemoryRegion:
        try:
            name, _ = self.placement[obj_id]
        except KeyError:
            raise LayoutError(f"object {obj_id!r} is not placed") from None
        return self.region(name)

    def start(self, obj_id: str) -> int:
        try:
            return self.placement[obj_id][1]
        except KeyError:
            raise LayoutError(f"object {obj_id!r} is not placed") from None

    def in_scratchpad(self, obj_id: str) -> bool:
        return self.spm_region is not None and self.placement[obj_id][0] == self.spm_region


def footprint(size: int, alignment: int = 4) -> int:
    return -(-size // alignment) * alignment


def _main_order(p: Program) -> list:
    objs = list(p.objects.values())
    code = [o for o in objs if o.kind is ObjectKind.FUNCTION]
    lits = [o for o in objs if o.kind is ObjectKind.LITERAL]
    data = [o for o in objs if o.kind is ObjectKind.DATA]
    # width-homogeneous data runs keep one annotation line per width
    data.sort(key=lambda o: -o.element_width)
    return code + lits + data


def assign_layout(p: Program, selection: Iterable[str] = (), config: LayoutConfig = LayoutConfig()) -> MemoryLayout:
    selected = set(selection)
    unknown = selected - set(p.objects)
    if unknown:
        raise LayoutError(f"unknown objects in selection: {sorted(unknown)}")
    align = config.alignment
    need = sum(footprint(p.objects[o].size, align) for o in selected)
    if need > config.spm_capacity:
        raise LayoutError(f"selection needs {need} bytes, scratchpad capacity is {config.spm_capacity}")

    regions = []
    placement = {}
    spm_name = None
    if config.spm_capacity > 0:
        spm = MemoryRegion(SCRATCHPAD, config.spm_base, config.spm_base + config.spm_capacity - 1,
                           dict(SPM_TIMING))
        regions.append(spm)
        spm_name = SCRATCHPAD
        cursor = config.spm_base
        for oid in p.objects:
            if oid in selected:
                placement[oid] = (SCRATCHPAD, cursor)
                cursor += footprint(p.objects[oid].size, align)

    main = MemoryRegion(MAIN, config.main_base, config.main_base + config.main_size - 1, dict(MAIN_TIMING))
    regions.append(main)
    cursor = footprint(config.main_base, align)
    for o in _main_order(p):
        if o.id in selected:
            continue
        if cursor + o.size - 1 > main.limit:
            raise LayoutError(f"address-space overflow placing {o.id!r}")
        placement[o.id] = (MAIN, cursor)
        cursor += footprint(o.size, align)

    if spm_name is not None and not (spm.limit < main.base or main.limit < spm.base):
        raise LayoutError("scratchpad and main memory overlap")
    layout = MemoryLayout(tuple(regions), placement, spm_name, dict(p.objects))
    check_layout(layout)
    return layout


def check_layout(layout: MemoryLayout) -> None:
    by_region = {}
    for oid, (rname, start) in layout.placement.items():
        r = layout.region(rname)
        o = layout.objects[oid]
        if not r.contains(start, o.size):
            raise LayoutError(f"object {oid!r} does not fit in region {rname!r}")
        if o.is_code and not r.allows_code or not o.is_code and not r.allows_data:
            raise LayoutError(f"object {oid!r} placed in incompatible region {rname!r}")
        by_region.setdefault(rname, []).append((start, start + o.size, oid))
    for spans in by_region.values():
        spans.sort()
        for (s0, e0, a), (s1, e1, b) in zip(spans, spans[1:]):
            if s1 < e0:
                raise LayoutError(f"objects {a!r} and {b!r} overlap")


def access_cost(layout: MemoryLayout, event: AccessEvent) -> int:
    return layout.region_of(event.obj).cycles_by_width[event.width]


# -- annotations -------------------------------------------------------------

def annotation_areas(layout: MemoryLayout, written: Iterable[str] = ()) -> list:
    """Split placed objects into maximal width-homogeneous MEMORY_AREA ranges.

    ``written`` names data objects with store accesses; their areas are
    annotated READ&WRITE.
    """
    written = set(written)
    placed = sorted(layout.placement.items(), key=lambda kv: kv[1][1])
    runs = []  # [key, first start, last end, name, any written]
    for oid, (rname, start) in placed:
        o = layout.objects[oid]
        region = layout.region(rname)
        end = start + o.size - 1
        if rname == layout.spm_region:
            cycles = region.uniform_cycles
            key = (rname, cycles, None, CODE_DATA)
            name = "Scratchpad"
        else:
            cycles = region.cycles_by_width[o.access_width]
            if o.kind is ObjectKind.FUNCTION:
                key, name = (rname, cycles, READ_ONLY, CODE_ONLY), "Instructions"
            elif o.kind is ObjectKind.LITERAL:
                key, name = (rname, cycles, READ_ONLY, DATA_ONLY), "Literal Pool"
            else:
                access = READ_WRITE if oid in written else READ_ONLY
                key, name = (rname, cycles, access, DATA_ONLY), f"Data ({o.element_width} bit)"
        if runs and runs[-1][0] == key:
            runs[-1][2] = end
            runs[-1][4] |= oid in written
        else:
            runs.append([key, start, end, name, oid in written])
    areas = []
    for (rname, cycles, access, contents), start, end, name, any_written in runs:
        if access is None:
            access = READ_WRITE if any_written else READ_ONLY
        areas.append(MemoryRegion(name, start, end, {8: cycles, 16: cycles, 32: cycles}, access, contents))
    return areas


def written_objects(p: Program) -> set:
    return {a.target for b in p.blocks.values() for a in b.data_accesses if a.is_write}


def format_annotation(areas: Iterable[MemoryRegion]) -> str:
    lines = []
    for r in areas:
        if r.name:
            lines.append(f"# {r.name}")
        lines.append(f"MEMORY_AREA: {r.base:#x} {r.limit:#x} {r.clock_ratio} {r.uniform_cycles} "
                     f"{r.access} {r.contents}")
    return "\n".join(lines) + ("\n" if lines else "")


def emit_annotation(layout: MemoryLayout, program: Program | None = None) -> str:
    written = written_objects(program) if program is not None else ()
    return format_annotation(annotation_areas(layout, written))


def parse_annotation(text: str) -> list:
    areas = []
    name = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            name = stripped[1:].strip()
            continue
        tokens = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", raw)]

        def err(msg, i):
            col = tokens[i][0] if i < len(tokens) else len(raw) + 1
            return AnnotationParseError(msg, lineno, col)

        if tokens[0][1] != "MEMORY_AREA:":
            raise err(f"expected 'MEMORY_AREA:', got {tokens[0][1]!r}", 0)
        if len(tokens) != 7:
            raise err(f"expected 6 fields after MEMORY_AREA:, got {len(tokens) - 1}", min(len(tokens), 7))
        try:
            base = int(tokens[1][1], 16)
        except ValueError:
            raise err(f"bad start address {tokens[1][1]!r}", 1) from None
        try:
            limit = int(tokens[2][1], 16)
        except ValueError:
            raise err(f"bad end address {tokens[2][1]!r}", 2) from None
        if limit < base:
            raise err("end address below start address", 2)
        if tokens[3][1] != "1:1":
            raise err(f"unsupported clock ratio {tokens[3][1]!r}", 3)
        try:
            cycles = int(tokens[4][1])
        except ValueError:
            raise err(f"bad cycle count {tokens[4][1]!r}", 4) from None
        if cycles < 1:
            raise err("cycle count must be >= 1", 4)
        access = _ACCESS_ALIASES.get(tokens[5][1])
        if access is None:
            raise err(f"bad access attribute {tokens[5][1]!r}", 5)
        contents = tokens[6][1]
        if contents not in _CONTENTS:
            raise err(f"bad contents attribute {contents!r}", 6)
        areas.append(MemoryRegion(name, base, limit, {8: cycles, 16: cycles, 32: cycles}, access, contents))
        name = ""
    return areas
