"""Graph self-maps: materialized maps, factored compositions, transition matrices.

A ``GraphMap`` stores explicit edge images.  A ``MapChain`` represents a
composition of graph maps by its factor list only: compositions built in
this package routinely have edge images with billions of letters, so a
chain never materializes them.  Instead it keeps exact (big integer)
image lengths per factor level and extracts arbitrary letter windows on
demand; short prefixes and suffixes are cached for the hot paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Graph, GraphError, Path, inverse, positive_label


class MapError(ValueError):
    """Raised for maps violating the graph-map contract."""


class GraphMap:
    """A graph self-map: vertices to vertices, edges to nonempty edge paths.

    The image of a reversed edge is the reversed image of the edge, by
    construction.  Instances are immutable after creation.
    """

    def __init__(
        self,
        graph: Graph,
        edge_images: dict[str, Sequence[str]],
        vertex_image: dict[str, str] | None = None,
    ):
        self.graph = graph
        images: dict[str, tuple[str, ...]] = {}
        for label in graph.positive_edges:
            if label not in edge_images:
                raise MapError(f"missing image for edge {label!r}")
            word = tuple(edge_images[label])
            if not word:
                raise MapError(f"contracted edge {label!r}")
            images[label] = word
            images[inverse(label)] = tuple(inverse(t) for t in reversed(word))
        if vertex_image is None:
            vertex_image = self._infer_vertex_image(graph, images)
        self.vertex_image: dict[str, str] = dict(vertex_image)
        self._images = images
        self._validate()
        self.touched_tokens = frozenset(
            t for t, w in images.items() if w != (t,)
        )
        self._matrix: "TransitionMatrix | None" = None

    @property
    def transition(self) -> "TransitionMatrix":
        if self._matrix is None:
            self._matrix = _single_transition_matrix(
                self, tuple(self.graph.positive_edges)
            )
        return self._matrix

    @staticmethod
    def _infer_vertex_image(graph: Graph, images) -> dict[str, str]:
        vmap: dict[str, str] = {}
        for label in graph.positive_edges:
            word = images[label]
            for v, w in ((graph.init_of(label), graph.init_of(word[0])),
                         (graph.term_of(label), graph.term_of(word[-1]))):
                if vmap.setdefault(v, w) != w:
                    raise MapError(f"incoherent images at vertex {v!r}")
        for v in graph.vertices:
            vmap.setdefault(v, v)
        return vmap

    def _validate(self):
        g = self.graph
        for v, w in self.vertex_image.items():
            if w not in set(g.vertices):
                raise MapError(f"vertex image {w!r} not a vertex")
        for label in g.positive_edges:
            word = self._images[label]
            path = Path(self.vertex_image[g.init_of(label)], word)
            if not g.path_is_valid(path):
                raise MapError(f"image of {label!r} is not a path")
            if g.path_end(path) != self.vertex_image[g.term_of(label)]:
                raise MapError(f"image of {label!r} ends at the wrong vertex")

    # -- basic queries ---------------------------------------------------

    def image_edges(self, token: str) -> tuple[str, ...]:
        return self._images[token]

    def image(self, token: str) -> Path:
        word = self._images[token]
        return Path(self.graph.init_of(word[0]), word)

    def image_length(self, token: str) -> int:
        return len(self._images[token])

    def direction(self, token: str) -> str:
        return self._images[token][0]

    def fixes_all_vertices(self) -> bool:
        return all(self.vertex_image[v] == v for v in self.graph.vertices)

    def apply_path(self, path: Path) -> Path:
        """Image path, concatenated without any tightening."""
        edges: list[str] = []
        for token in path.edges:
            edges.extend(self._images[token])
        return Path(self.vertex_image[path.start], tuple(edges))

    def apply_word_prefix(self, word: Sequence[str], k: int) -> list[str]:
        out: list[str] = []
        for token in word:
            need = k - len(out)
            if need <= 0:
                break
            out.extend(self._images[token][:need])
        return out

    def apply_word_suffix(self, word: Sequence[str], k: int) -> list[str]:
        out: list[str] = []
        for token in reversed(word):
            need = k - len(out)
            if need <= 0:
                break
            block = self._images[token]
            out[:0] = block[-need:]
        return out

    def image_window(self, token: str, start: int, count: int) -> list[str]:
        return list(self._images[token][start:start + count])

    def word_image_length(self, word: Sequence[str]) -> int:
        return sum(len(self._images[t]) for t in word)

    @property
    def factors(self) -> tuple["GraphMap", ...]:
        return (self,)

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, graph: Graph) -> "GraphMap":
        return cls(graph, {e: (e,) for e in graph.positive_edges})

    @classmethod
    def from_updates(cls, graph: Graph, updates: dict[str, Sequence[str]]) -> "GraphMap":
        """Map sending every edge outside ``updates`` identically to itself."""
        images = {e: (e,) for e in graph.positive_edges}
        for label, word in updates.items():
            if not is_positive_label(label):
                raise MapError("updates must be keyed by positive edges")
            images[label] = tuple(word)
        return cls(graph, images)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {"images": {e: list(self._images[e]) for e in self.graph.positive_edges}}

    @classmethod
    def from_json(cls, graph: Graph, data: dict) -> "GraphMap":
        return cls(graph, {e: tuple(w) for e, w in data["images"].items()})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GraphMap)
            and self.vertex_image == other.vertex_image
            and self._images == other._images
        )

    def __hash__(self):
        return hash(tuple(sorted(self._images.items())))

    def __repr__(self) -> str:
        longest = max(len(w) for w in self._images.values())
        return f"GraphMap({len(self.graph.positive_edges)} edges, longest image {longest})"


def is_positive_label(label: str) -> bool:
    return not label.startswith("~")


def compose_maps(f: GraphMap, g: GraphMap) -> GraphMap:
    """The composition f∘g (g applied first), never tightened.

    Crossing counts multiply exactly only without cancellation, which is
    what keeps M(f∘g) = M(f)M(g) an identity rather than an inequality.
    """
    if f.graph is not g.graph and f.graph.to_json() != g.graph.to_json():
        raise MapError("compose_maps needs maps on the same graph")
    images = {
        e: f.apply_path(g.image(e)).edges for e in g.graph.positive_edges
    }
    vmap = {v: f.vertex_image[g.vertex_image[v]] for v in g.graph.vertices}
    return GraphMap(g.graph, images, vmap)


# -- transition matrices ---------------------------------------------------


@dataclass(frozen=True)
class TransitionMatrix:
    """Non-negative integer matrix of orientation-blind crossing counts.

    ``rows[i][j]`` counts crossings of edge ``labels[i]`` (or its reverse)
    in the image of edge ``labels[j]``.  Entries are exact Python ints.
    """

    labels: tuple[str, ...]
    rows: tuple[tuple[int, ...], ...]

    def entry(self, crossed: str, source: str) -> int:
        i = self.labels.index(crossed)
        j = self.labels.index(source)
        return self.rows[i][j]

    def __matmul__(self, other: "TransitionMatrix") -> "TransitionMatrix":
        if self.labels != other.labels:
            raise MapError("matrix label mismatch")
        n = len(self.labels)
        cols = list(zip(*other.rows))
        rows = tuple(
            tuple(sum(a * b for a, b in zip(row, col)) for col in cols)
            for row in self.rows
        )
        return TransitionMatrix(self.labels, rows)

    @classmethod
    def identity(cls, labels: Sequence[str]) -> "TransitionMatrix":
        n = len(labels)
        return cls(tuple(labels), tuple(
            tuple(1 if i == j else 0 for j in range(n)) for i in range(n)
        ))

    @property
    def is_positive(self) -> bool:
        return all(all(x > 0 for x in row) for row in self.rows)

    def column_sum(self, label: str) -> int:
        j = self.labels.index(label)
        return sum(row[j] for row in self.rows)

    def max_column_sum(self) -> int:
        return max(
            sum(row[j] for row in self.rows) for j in range(len(self.labels))
        )

    def power(self, t: int) -> "TransitionMatrix":
        result = TransitionMatrix.identity(self.labels)
        base = self
        while t:
            if t & 1:
                result = result @ base
            base = base @ base if t > 1 else base
            t >>= 1
        return result

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "rows": [list(r) for r in self.rows]}


def transition_matrix(f) -> TransitionMatrix:
    """Transition matrix of a map or chain (product over chain factors)."""
    if hasattr(f, "transition"):
        return f.transition
    factors = f.factors
    labels = tuple(f.graph.positive_edges)
    result: TransitionMatrix | None = None
    for factor in factors:
        m = factor.transition
        result = m if result is None else m @ result
    assert result is not None
    return result


def _single_transition_matrix(f: GraphMap, labels: tuple[str, ...]) -> TransitionMatrix:
    index = {lab: i for i, lab in enumerate(labels)}
    cols = []
    for e in labels:
        col = [0] * len(labels)
        for token in f.image_edges(e):
            col[index[positive_label(token)]] += 1
        cols.append(col)
    rows = tuple(tuple(cols[j][i] for j in range(len(labels))) for i in range(len(labels)))
    return TransitionMatrix(labels, rows)


def is_primitive(m: TransitionMatrix) -> tuple[bool, int | None]:
    """Least t with M^t entrywise positive, over the boolean semiring.

    The Wielandt bound (n-1)^2 + 1 makes the search complete: a primitive
    n x n matrix always has a positive power within it.
    """
    n = len(m.labels)
    if n == 0:
        return (False, None)
    full = (1 << n) - 1
    base = [
        sum(1 << j for j, x in enumerate(row) if x > 0) for row in m.rows
    ]
    bound = (n - 1) ** 2 + 1
    current = list(base)
    for t in range(1, bound + 1):
        if t > 1:
            current = _bool_mul(current, base, n)
        if all(r == full for r in current):
            return (True, t)
    return (False, None)


def _bool_mul(a: list[int], b: list[int], n: int) -> list[int]:
    out = []
    for i in range(n):
        row = 0
        bits = a[i]
        j = 0
        while bits:
            if bits & 1:
                row |= b[j]
            bits >>= 1
            j += 1
        out.append(row)
    return out


def word_count_vector(graph: Graph, word: Sequence[str]) -> dict[str, int]:
    counts = {e: 0 for e in graph.positive_edges}
    for token in word:
        counts[positive_label(token)] += 1
    return counts


# -- factored compositions ---------------------------------------------------


class MapChain:
    """A composition of graph maps, stored as its factor list.

    ``factors[0]`` is applied first.  Edge images are never materialized;
    exact lengths come from per-level big-int tables and letter windows
    are extracted by descending the factor levels.  Levels whose factor
    leaves a token untouched reuse the deeper level's data, which keeps
    table construction fast for the long, sparse chains built here.
    """

    def __init__(self, graph: Graph, factors: Sequence[GraphMap]):
        if not factors:
            raise MapError("empty chain")
        for f in factors:
            if f.graph is not graph:
                raise MapError("chain factors must share one graph instance")
        self.graph = graph
        self.factors: tuple[GraphMap, ...] = tuple(factors)
        vmap = {v: v for v in graph.vertices}
        for f in self.factors:
            vmap = {v: f.vertex_image[w] for v, w in vmap.items()}
        self.vertex_image = vmap
        self._suffix_lengths: list[dict[str, int]] | None = None
        self._prefix: dict[str, list[str]] = {}
        self._prefix_k = 0
        self._suffix: dict[str, list[str]] = {}
        self._suffix_k = 0
        self._matrix: TransitionMatrix | None = None

    def then(self, f: GraphMap) -> "MapChain":
        """The chain followed by one more map (f applied last)."""
        return MapChain(self.graph, self.factors + (f,))

    @property
    def transition(self) -> TransitionMatrix:
        if self._matrix is None:
            result: TransitionMatrix | None = None
            for factor in self.factors:
                m = factor.transition
                result = m if result is None else m @ result
            assert result is not None
            self._matrix = result
        return self._matrix

    def fixes_all_vertices(self) -> bool:
        return all(self.vertex_image[v] == v for v in self.graph.vertices)

    def direction(self, token: str) -> str:
        for f in self.factors:
            token = f.direction(token)
        return token

    # -- exact lengths ---------------------------------------------------

    def _lengths(self) -> list[dict[str, int]]:
        if self._suffix_lengths is None:
            m = len(self.factors)
            tables: list[dict[str, int]] = [dict() for _ in range(m + 1)]
            tables[m] = {t: 1 for t in self.graph.directed_edges}
            for j in range(m - 1, -1, -1):
                f = self.factors[j]
                deeper = tables[j + 1]
                table = dict(deeper)
                for token in f.touched_tokens:
                    table[token] = sum(deeper[y] for y in f.image_edges(token))
                tables[j] = table
            self._suffix_lengths = tables
        return self._suffix_lengths

    def image_length(self, token: str) -> int:
        return self._lengths()[0][token]

    def word_image_length(self, word: Sequence[str]) -> int:
        table = self._lengths()[0]
        return sum(table[t] for t in word)

    # -- cached prefixes and suffixes -------------------------------------

    def _ensure_prefix(self, k: int):
        if self._prefix_k >= k:
            return
        k = max(k, 64)
        m = len(self.factors)
        cur = {t: [t] for t in self.graph.directed_edges}
        for j in range(m - 1, -1, -1):
            f = self.factors[j]
            touched = f.touched_tokens
            if touched:
                nxt = dict(cur)
                for token in touched:
                    buf: list[str] = []
                    for y in f.image_edges(token):
                        need = k - len(buf)
                        if need <= 0:
                            break
                        buf.extend(cur[y][:need])
                    nxt[token] = buf
                cur = nxt
        self._prefix = cur
        self._prefix_k = k

    def _ensure_suffix(self, k: int):
        if self._suffix_k >= k:
            return
        k = max(k, 64)
        m = len(self.factors)
        cur = {t: [t] for t in self.graph.directed_edges}
        for j in range(m - 1, -1, -1):
            f = self.factors[j]
            touched = f.touched_tokens
            if touched:
                nxt = dict(cur)
                for token in touched:
                    buf: list[str] = []
                    for y in reversed(f.image_edges(token)):
                        need = k - len(buf)
                        if need <= 0:
                            break
                        buf[:0] = cur[y][-need:]
                    nxt[token] = buf
                cur = nxt
        self._suffix = cur
        self._suffix_k = k

    def image_prefix(self, token: str, k: int) -> list[str]:
        self._ensure_prefix(k)
        return self._prefix[token][:k]

    def apply_word_prefix(self, word: Sequence[str], k: int) -> list[str]:
        self._ensure_prefix(k)
        out: list[str] = []
        prefix = self._prefix
        for token in word:
            need = k - len(out)
            if need <= 0:
                break
            out.extend(prefix[token][:need])
        return out

    def apply_word_suffix(self, word: Sequence[str], k: int) -> list[str]:
        self._ensure_suffix(k)
        out: list[str] = []
        suffix = self._suffix
        for token in reversed(word):
            need = k - len(out)
            if need <= 0:
                break
            out[:0] = suffix[token][-need:]
        return out

    # -- arbitrary windows -------------------------------------------------

    def image_window(self, token: str, start: int, count: int) -> list[str]:
        """Letters [start, start+count) of the image of ``token``."""
        lengths = self._lengths()
        m = len(self.factors)
        out: list[str] = []
        stack: list[tuple[int, str, int, int]] = [(0, token, start, count)]
        while stack:
            j, tok, s, c = stack.pop()
            if c <= 0:
                continue
            if j == m:
                out.append(tok)
                continue
            segs: list[tuple[int, str, int, int]] = []
            for y in self.factors[j].image_edges(tok):
                if c <= 0:
                    break
                block = lengths[j + 1][y]
                if s >= block:
                    s -= block
                    continue
                take = min(c, block - s)
                segs.append((j + 1, y, s, take))
                c -= take
                s = 0
            stack.extend(reversed(segs))
        return out

    def apply_path(self, path: Path, budget: int = 2_000_000) -> Path:
        """Materialized image path; refuses outputs beyond ``budget`` letters."""
        total = self.word_image_length(path.edges)
        if total > budget:
            raise MapError(f"image has {total} letters, over the budget {budget}")
        edges: list[str] = []
        for token in path.edges:
            edges.extend(self.image_window(token, 0, self.image_length(token)))
        return Path(self.vertex_image[path.start], tuple(edges))

    def materialize(self, budget: int = 2_000_000) -> GraphMap:
        total = sum(self.image_length(e) for e in self.graph.positive_edges)
        if total > budget:
            raise MapError(
                f"chain images total {total} letters, over the budget {budget}"
            )
        images = {
            e: tuple(self.image_window(e, 0, self.image_length(e)))
            for e in self.graph.positive_edges
        }
        return GraphMap(self.graph, images, dict(self.vertex_image))

    def to_json(self) -> dict:
        return {"factors": [f.to_json() for f in self.factors]}

    @classmethod
    def from_json(cls, graph: Graph, data: dict) -> "MapChain":
        return cls(graph, [GraphMap.from_json(graph, d) for d in data["factors"]])

    def __repr__(self) -> str:
        return f"MapChain({len(self.factors)} factors)"


def as_chain(f) -> MapChain:
    if isinstance(f, MapChain):
        return f
    return MapChain(f.graph, [f])


class ComparisonBudgetError(RuntimeError):
    """Raised when an image comparison outruns its step budget."""


class ImageCursor:
    """Depth-first position in the expansion tree of a chain image.

    The image of a word under ``f_m ∘ ... ∘ f_1`` is a tree: a level-j node
    holding token x expands through factor j into the letters of f_j(x),
    and depth-m nodes are the actual letters.  A cursor always sits at the
    start of its current node's subtree, so two cursors on the same chain
    whose nodes carry the same level and token face identical subtrees.
    """

    __slots__ = ("factors", "lengths", "stack", "pos", "depth")

    def __init__(self, chain: MapChain, word: Sequence[str]):
        self.factors = chain.factors
        self.lengths = chain._lengths()
        self.depth = len(self.factors)
        self.stack: list[list] = [[0, tuple(word), 0]] if word else []
        self.pos = 0

    def at_end(self) -> bool:
        return not self.stack

    def node(self) -> tuple[int, str]:
        frame = self.stack[-1]
        return (frame[0], frame[1][frame[2]])

    def advance(self) -> None:
        """Move past the current node's whole subtree."""
        frame = self.stack[-1]
        self.pos += self.lengths[frame[0]][frame[1][frame[2]]]
        while True:
            frame[2] += 1
            if frame[2] < len(frame[1]):
                return
            self.stack.pop()
            if not self.stack:
                return
            frame = self.stack[-1]

    def descend(self) -> None:
        """Replace the current node by its expansion one level down."""
        frame = self.stack[-1]
        token = frame[1][frame[2]]
        self.stack.append([frame[0] + 1, self.factors[frame[0]].image_edges(token), 0])


def compare_image_words(
    chain: MapChain,
    word_a: Sequence[str],
    word_b: Sequence[str],
    step_budget: int = 20_000_000,
):
    """Locate the first divergence of two chain images.

    Returns ("diverge", pos, letter_a, letter_b) where pos is the common
    prefix length, or ("contained", side, pos) with side "a", "b" or
    "equal" when one image is an initial subpath of the other.  Equal
    subtrees are skipped whole, so structurally shared prefixes (the
    common case for the compositions built here) cost O(1) each.
    """
    a = ImageCursor(chain, word_a)
    b = ImageCursor(chain, word_b)
    depth = a.depth
    steps = 0
    while True:
        steps += 1
        if steps > step_budget:
            raise ComparisonBudgetError(
                f"image comparison exceeded {step_budget} steps at position {a.pos}"
            )
        if a.at_end() or b.at_end():
            if a.at_end() and b.at_end():
                return ("contained", "equal", a.pos)
            return ("contained", "a" if a.at_end() else "b", min(a.pos, b.pos))
        ja, ta = a.node()
        jb, tb = b.node()
        if ja == jb:
            if ta == tb:
                a.advance()
                b.advance()
            elif ja == depth:
                return ("diverge", a.pos, ta, tb)
            else:
                a.descend()
                b.descend()
        elif ja < jb:
            a.descend()
        else:
            b.descend()


def word_image_window(chain: MapChain, word: Sequence[str], start: int, count: int) -> list[str]:
    """Letters [start, start+count) of the chain image of a word."""
    out: list[str] = []
    for token in word:
        if count <= 0:
            break
        ln = chain.image_length(token)
        if start >= ln:
            start -= ln
            continue
        take = min(count, ln - start)
        out.extend(chain.image_window(token, start, take))
        count -= take
        start = 0
    return out


def truncated_power_prefix(f, word: Sequence[str], power: int, k: int) -> list[str]:
    """First k letters of f^power applied to ``word``.

    Valid because maps have no contracted edges, so the first k letters
    of an image depend only on the first k letters of the argument.
    """
    out = list(word)
    for _ in range(power):
        out = f.apply_word_prefix(out, k)
    return out


def truncated_power_suffix(f, word: Sequence[str], power: int, k: int) -> list[str]:
    out = list(word)
    for _ in range(power):
        out = f.apply_word_suffix(out, k)
    return out


def power_image_length(f, word: Sequence[str], power: int) -> int:
    """Exact |f^power(word)| via transition-matrix powers."""
    graph = f.graph
    m = f.transition
    counts = word_count_vector(graph, word)
    vec = [counts[e] for e in m.labels]
    for _ in range(power):
        vec = [sum(row[j] * vec[j] for j in range(len(vec))) for row in m.rows]
    return sum(vec)
