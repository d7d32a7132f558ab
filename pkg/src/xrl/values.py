"""Runtime values of the object language: naturals, booleans, pointers, regions.

Values are immutable and hashable. Cross-variant equality is always False
(a natural 0 is not the boolean false), which the tagged wrappers guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Ptr:
    """A pointer: address paired with the class name it was allocated at."""

    addr: int
    cls: str

    def __repr__(self) -> str:
        return f"Ptr({self.addr},{self.cls})"


#: The distinguished null pointer. Address 0 is never handed out by allocate.
NULL = Ptr(0, "Null")


@dataclass(frozen=True)
class VNat:
    n: int

    def __repr__(self) -> str:
        return f"VNat({self.n})"


@dataclass(frozen=True)
class VBool:
    b: bool

    def __repr__(self) -> str:
        return f"VBool({self.b})"


@dataclass(frozen=True)
class VRegion:
    """A region: a finite set of pointers."""

    ptrs: frozenset[Ptr]

    def __repr__(self) -> str:
        inner = ",".join(repr(p) for p in sorted(self.ptrs, key=lambda p: (p.addr, p.cls)))
        return f"VRegion({{{inner}}})"


Value = VNat | VBool | Ptr | VRegion

TRUE = VBool(True)
FALSE = VBool(False)
NAT0 = VNat(0)
EMPTY_REGION = VRegion(frozenset())

#: Default value for untyped stack/heap lookups.
DEFAULT_VALUE: Value = NAT0


def nat(n: int) -> VNat:
    if n < 0:
        raise ValueError(f"naturals are non-negative, got {n}")
    return VNat(n)


def region(ptrs) -> VRegion:
    return VRegion(frozenset(ptrs))


def cast_nat(v: Value) -> int:
    """Cast to a natural, defaulting to 0."""
    return v.n if isinstance(v, VNat) else 0


def cast_bool(v: Value) -> bool:
    """Cast to a boolean, defaulting to False."""
    return v.b if isinstance(v, VBool) else False


def cast_ptr(v: Value) -> Ptr:
    """Cast to a pointer, defaulting to null."""
    return v if isinstance(v, Ptr) else NULL


def cast_region(v: Value) -> frozenset[Ptr]:
    """Cast to a pointer set, defaulting to the empty region."""
    return v.ptrs if isinstance(v, VRegion) else frozenset()


def value_to_json(v: Value):
    if isinstance(v, VNat):
        return {"nat": v.n}
    if isinstance(v, VBool):
        return {"bool": v.b}
    if isinstance(v, Ptr):
        return {"ptr": [v.addr, v.cls]}
    if isinstance(v, VRegion):
        return {"region": sorted(([p.addr, p.cls] for p in v.ptrs))}
    raise TypeError(f"not a value: {v!r}")


def value_from_json(obj) -> Value:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError(f"malformed value: {obj!r}")
    (tag, payload), = obj.items()
    if tag == "nat":
        return nat(payload)
    if tag == "bool":
        return VBool(bool(payload))
    if tag == "ptr":
        addr, cls = payload
        return Ptr(addr, cls)
    if tag == "region":
        return VRegion(frozenset(Ptr(a, c) for a, c in payload))
    raise ValueError(f"unknown value tag: {tag}")
