"""Words, free matrix polynomials and their evaluation at symmetric matrix tuples.

A word is a tuple of 1-based letter indices; ``()`` is the empty word.
Multiplication never commutes letters.
"""

from __future__ import annotations

import itertools
import re
from typing import Iterable, Mapping, Sequence

import numpy as np

from .matops import block_diag, is_symmetric

Word = tuple[int, ...]
EMPTY: Word = ()


def involution(w: Sequence[int]) -> Word:
    return tuple(reversed(tuple(w)))


def is_palindrome(w: Word) -> bool:
    return w == w[::-1]


def class_rep(w: Word) -> Word:
    """Canonical representative of ``{w, w*}``: the lexicographically smaller one."""
    r = involution(w)
    return min(w, r)


def enumerate_words(g: int, max_deg: int) -> list[Word]:
    """All words of length <= max_deg, graded, lexicographic within a degree."""
    if g < 1 or max_deg < 0:
        raise ValueError("need g >= 1 and max_deg >= 0")
    out: list[Word] = []
    for k in range(max_deg + 1):
        out.extend(itertools.product(range(1, g + 1), repeat=k))
    return out


def word_count(g: int, max_deg: int) -> int:
    return sum(g ** k for k in range(max_deg + 1))


def word_str(w: Word) -> str:
    """Digit-string form used in files (letters must be < 10 for round-tripping)."""
    return "".join(str(i) for i in w)


def parse_word(s: str) -> Word:
    return tuple(int(ch) for ch in s)


class MatrixTuple:
    """A g-tuple of real symmetric n x n matrices."""

    def __init__(self, mats: Iterable, check: bool = True):
        arrs = [np.array(M, dtype=float, ndmin=2) for M in mats]
        if not arrs:
            raise ValueError("a matrix tuple needs at least one entry")
        n = arrs[0].shape[0]
        for A in arrs:
            if A.shape != (n, n):
                raise ValueError("all entries must be n x n with a common n")
            if check and not is_symmetric(A, rtol=1e-10):
                raise ValueError("tuple entries must be symmetric")
        self.mats = [0.5 * (A + A.T) for A in arrs]

    @classmethod
    def scalar(cls, values: Sequence[float]) -> "MatrixTuple":
        return cls([[[float(v)]] for v in values])

    @property
    def g(self) -> int:
        return len(self.mats)

    @property
    def n(self) -> int:
        return self.mats[0].shape[0]

    def __getitem__(self, j: int) -> np.ndarray:
        return self.mats[j]

    def __iter__(self):
        return iter(self.mats)

    def __len__(self) -> int:
        return len(self.mats)

    def norm(self) -> float:
        return max(float(np.linalg.norm(A, 2)) for A in self.mats)

    def to_json(self) -> dict:
        return {"g": self.g, "n": self.n, "matrices": [A.tolist() for A in self.mats]}

    @classmethod
    def from_json(cls, data: Mapping) -> "MatrixTuple":
        X = cls(data["matrices"])
        if "g" in data and data["g"] != X.g:
            raise ValueError(f"point file declares g={data['g']} but has {X.g} matrices")
        if "n" in data and data["n"] != X.n:
            raise ValueError(f"point file declares n={data['n']} but matrices are {X.n}x{X.n}")
        return X

    def __repr__(self) -> str:
        return f"MatrixTuple(g={self.g}, n={self.n})"


def eval_word(w: Word, X: MatrixTuple) -> np.ndarray:
    out = np.eye(X.n)
    for i in w:
        if not 1 <= i <= X.g:
            raise ValueError(f"letter x{i} out of range for g={X.g}")
        out = out @ X[i - 1]
    return out


class MatrixPoly:
    """Free polynomial ``sum_w B_w w`` with ``l x l`` real coefficient blocks."""

    def __init__(self, g: int, block_dim: int = 1, terms: Mapping | None = None):
        if g < 1 or block_dim < 1:
            raise ValueError("need g >= 1 and block_dim >= 1")
        self.g = g
        self.block_dim = block_dim
        self.terms: dict[Word, np.ndarray] = {}
        for w, B in (terms or {}).items():
            self._accumulate(tuple(w), B)

    def _accumulate(self, w: Word, B) -> None:
        if any(not 1 <= i <= self.g for i in w):
            raise ValueError(f"word {w} uses a letter outside x1..x{self.g}")
        B = np.array(B, dtype=float, ndmin=2)
        if B.shape == (1, 1) and self.block_dim > 1:
            B = B[0, 0] * np.eye(self.block_dim)
        if B.shape != (self.block_dim, self.block_dim):
            raise ValueError(f"coefficient of {w} has shape {B.shape}, expected {self.block_dim}")
        acc = self.terms.get(w, 0.0) + B
        if np.any(acc != 0.0):
            self.terms[w] = acc
        else:
            self.terms.pop(w, None)

    # constructors ---------------------------------------------------------
    @classmethod
    def constant(cls, c, g: int) -> "MatrixPoly":
        c = np.array(c, dtype=float, ndmin=2)
        return cls(g, c.shape[0], {EMPTY: c})

    @classmethod
    def variable(cls, j: int, g: int) -> "MatrixPoly":
        return cls(g, 1, {(j,): 1.0})

    @classmethod
    def monomial(cls, w: Sequence[int], g: int, coef: float = 1.0) -> "MatrixPoly":
        return cls(g, 1, {tuple(w): coef})

    @classmethod
    def direct_sum(cls, *polys: "MatrixPoly") -> "MatrixPoly":
        g = polys[0].g
        if any(q.g != g for q in polys):
            raise ValueError("direct sum of polynomials in different variable counts")
        words = set().union(*(q.terms for q in polys))
        terms = {w: block_diag(*(q.coefficient(w) for q in polys)) for w in words}
        return cls(g, sum(q.block_dim for q in polys), terms)

    # queries -------------------------------------------------------------
    def coefficient(self, w: Sequence[int]) -> np.ndarray:
        return self.terms.get(tuple(w), np.zeros((self.block_dim, self.block_dim)))

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def is_symmetric(self, tol: float = 0.0) -> bool:
        for w, B in self.terms.items():
            if np.abs(self.coefficient(involution(w)).T - B).max() > tol:
                return False
        return True

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(np.abs(B).max() <= tol for B in self.terms.values())

    def support(self) -> list[Word]:
        return sorted(self.terms, key=lambda w: (len(w), w))

    # arithmetic ----------------------------------------------------------
    def _coerce(self, other) -> "MatrixPoly":
        if isinstance(other, MatrixPoly):
            if other.g != self.g:
                raise ValueError(f"variable count mismatch: {self.g} vs {other.g}")
            return other
        return MatrixPoly.constant(float(other) * np.eye(self.block_dim), self.g)

    def _common_dim(self, other: "MatrixPoly") -> int:
        dims = {self.block_dim, other.block_dim}
        if len(dims) == 2 and 1 not in dims:
            raise ValueError(f"block dimension mismatch: {self.block_dim} vs {other.block_dim}")
        return max(dims)

    def __add__(self, other) -> "MatrixPoly":
        other = self._coerce(other)
        out = MatrixPoly(self.g, self._common_dim(other))
        for q in (self, other):
            for w, B in q.terms.items():
                out._accumulate(w, B)
        return out

    __radd__ = __add__

    def __neg__(self) -> "MatrixPoly":
        return self.scale(-1.0)

    def __sub__(self, other) -> "MatrixPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MatrixPoly":
        return self._coerce(other) - self

    def scale(self, c: float) -> "MatrixPoly":
        return MatrixPoly(self.g, self.block_dim, {w: c * B for w, B in self.terms.items()})

    def __mul__(self, other) -> "MatrixPoly":
        if not isinstance(other, MatrixPoly):
            return self.scale(float(other))
        other = self._coerce(other)
        dim = self._common_dim(other)
        out = MatrixPoly(self.g, dim)
        for w, A in self.terms.items():
            for v, B in other.terms.items():
                prod = A @ B if A.shape == B.shape else (A * B if A.size == 1 or B.size == 1 else None)
                if prod is None:
                    raise ValueError("incompatible coefficient blocks")
                out._accumulate(w + v, prod)
        return out

    def __rmul__(self, other) -> "MatrixPoly":
        return self.scale(float(other))

    def __pow__(self, k: int) -> "MatrixPoly":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = MatrixPoly.constant(np.eye(self.block_dim), self.g)
        for _ in range(k):
            out = out * self
        return out

    def star(self) -> "MatrixPoly":
        """The involution: transpose coefficients, reverse words."""
        return MatrixPoly(self.g, self.block_dim,
                          {involution(w): B.T for w, B in self.terms.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixPoly):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):  # mutable-ish container; identity hash is fine
        return id(self)

    def __repr__(self) -> str:
        try:
            return f"MatrixPoly({format_poly(self)!r})"
        except ValueError:
            return f"MatrixPoly(g={self.g}, block_dim={self.block_dim}, terms={len(self.terms)})"

    # evaluation ----------------------------------------------------------
    def __call__(self, X: MatrixTuple) -> np.ndarray:
        return eval_poly(self, X)


def eval_poly(P: MatrixPoly, X: MatrixTuple) -> np.ndarray:
    """``P(X) = sum_w B_w (x) w(X)``."""
    if P.g != X.g:
        raise ValueError(f"polynomial has g={P.g} but the point has g={X.g}")
    n, ell = X.n, P.block_dim
    out = np.zeros((ell * n, ell * n))
    cache: dict[Word, np.ndarray] = {EMPTY: np.eye(n)}

    def power(w: Word) -> np.ndarray:
        if w not in cache:
            cache[w] = power(w[:-1]) @ X[w[-1] - 1]
        return cache[w]

    for w, B in P.terms.items():
        out += np.kron(B, power(w))
    return out


# ---------------------------------------------------------------------------
# text format

class PolySyntaxError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
                    r"|(?P<var>x(?P<idx>\d+))|(?P<diag>diag\s*\()|(?P<op>[-+*^();]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolySyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}",
                                  pos + len(text[pos:]) - len(text[pos:].lstrip()))
        start = m.start() + len(m.group(0)) - len(m.group(0).lstrip())
        if m.group("num"):
            toks.append(("num", m.group("num"), start))
        elif m.group("var"):
            toks.append(("var", m.group("idx"), start))
        elif m.group("diag"):
            toks.append(("diag", "diag(", start))
        else:
            toks.append(("op", m.group("op"), start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, g: int):
        self.toks = _tokenize(text)
        self.i = 0
        self.g = g

    def peek(self):
        return self.toks[self.i]

    def take(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of input"
            raise PolySyntaxError(f"expected {want!r}, found {got!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> MatrixPoly:
        out = self.expr()
        self.take("end")
        return out

    def expr(self) -> MatrixPoly:
        acc = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take("op")[1]
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> MatrixPoly:
        sign = 1.0
        if self.peek()[:2] in (("op", "-"), ("op", "+")):
            sign = -1.0 if self.take("op")[1] == "-" else 1.0
        acc = self.factor().scale(sign)
        while self.peek()[:2] == ("op", "*"):
            self.take("op", "*")
            acc = acc * self.factor()
        return acc

    def factor(self) -> MatrixPoly:
        base = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take("op", "^")
            tok = self.take("num")
            if not tok[1].isdigit():
                raise PolySyntaxError("exponent must be a non-negative integer", tok[2])
            base = base ** int(tok[1])
        return base

    def base(self) -> MatrixPoly:
        kind, val, pos = self.peek()
        if kind == "num":
            self.i += 1
            return MatrixPoly.constant(float(val), self.g)
        if kind == "var":
            self.i += 1
            j = int(val)
            if not 1 <= j <= self.g:
                raise PolySyntaxError(f"unknown variable x{j} (g={self.g})", pos)
            return MatrixPoly.variable(j, self.g)
        if kind == "diag":
            self.i += 1
            parts = [self.expr()]
            while self.peek()[:2] == ("op", ";"):
                self.take("op", ";")
                parts.append(self.expr())
            self.take("op", ")")
            return MatrixPoly.direct_sum(*parts)
        if (kind, val) == ("op", "("):
            self.i += 1
            inner = self.expr()
            self.take("op", ")")
            return inner
        raise PolySyntaxError(f"unexpected {val or 'end of input'!r}", pos)


def parse_poly(text: str, g: int) -> MatrixPoly:
    """Parse the polynomial grammar (``x1..xg``, ``+ - * ^``, parentheses, ``diag(p;q)``)."""
    return _Parser(text, g).parse()


def infer_g(text: str) -> int:
    idx = [int(m) for m in re.findall(r"x(\d+)", text)]
    return max(idx, default=1)


def _fmt_num(c: float) -> str:
    if float(c).is_integer() and abs(c) < 1e15:
        return str(int(c))
    return repr(float(c))


def _fmt_word(w: Word) -> str:
    parts = []
    for letter, grp in itertools.groupby(w):
        k = len(list(grp))
        parts.append(f"x{letter}" + (f"^{k}" if k > 1 else ""))
    return "*".join(parts)


def _format_scalar(terms: Mapping[Word, float]) -> str:
    items = [(w, c) for w, c in sorted(terms.items(), key=lambda t: (len(t[0]), t[0])) if c != 0]
    if not items:
        return "0"
    out = []
    for k, (w, c) in enumerate(items):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        if not w:
            body = _fmt_num(mag)
        elif mag == 1:
            body = _fmt_word(w)
        else:
            body = f"{_fmt_num(mag)}*{_fmt_word(w)}"
        if k == 0:
            out.append(("-" if sign == "-" else "") + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


def format_poly(P: MatrixPoly) -> str:
    """Canonical text; block-diagonal polynomials print as ``diag(...; ...)``."""
    if P.block_dim == 1:
        return _format_scalar({w: float(B[0, 0]) for w, B in P.terms.items()})
    for B in P.terms.values():
        if np.any(B - np.diag(np.diag(B))):
            raise ValueError("only diagonal matrix coefficients have a text form")
    parts = [_format_scalar({w: float(B[i, i]) for w, B in P.terms.items()})
             for i in range(P.block_dim)]
    return "diag(" + " ; ".join(parts) + ")"


__all__ = [
    "EMPTY", "MatrixPoly", "MatrixTuple", "PolySyntaxError", "Word", "class_rep",
    "enumerate_words", "eval_poly", "eval_word", "format_poly", "infer_g", "involution",
    "is_palindrome", "parse_poly", "parse_word", "word_count", "word_str",
]
