"""Hierarchical tensor format on a balanced binary dimension tree.

A tensor is stored as one frame per leaf (coefficients of that dimension's
basis, shape ``(Q_k, r_k)``) and one transfer array per interior node (shape
``(r_left, r_right, r_node)``) expressing the node's effective frame as
combinations of Kronecker products of its children's columns.  The root is a
node of rank one, so its transfer is the ``(r_left, r_right, 1)`` weight
array of the full tensor.

Addition concatenates block-diagonally, separable operators act leaf by
leaf, and rank reduction is the usual two-pass scheme: orthogonalize from
the leaves up, then project every node onto the dominant eigenvectors of
its environment Gram matrix on the way down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec, FactorKind, eval_basis, factor_matrix
from .cp import CPTensor
from .operators import SeparableOperator

__all__ = [
    "TreeNode",
    "DimensionTree",
    "balanced_tree",
    "HTTensor",
    "from_cp",
    "evaluate",
    "add",
    "scale",
    "apply_operator",
    "inner_product",
    "norm",
    "orthogonalize",
    "truncate",
]


@dataclass(frozen=True)
class TreeNode:
    dims: tuple[int, ...]
    parent: int  # -1 at the root
    left: int    # -1 at leaves
    right: int

    @property
    def is_leaf(self) -> bool:
        return self.left < 0


@dataclass(frozen=True)
class DimensionTree:
    """Binary tree over dimensions; ``nodes[0]`` is the root, children carry
    larger indices than their parent (preorder), so ascending index order is
    root-to-leaves and descending is leaves-to-root."""

    nodes: tuple[TreeNode, ...]

    def __post_init__(self):
        if not self.nodes or self.nodes[0].parent != -1:
            raise ValueError("nodes[0] must be the root")
        seen = sorted(d for n in self.nodes if n.is_leaf for d in n.dims)
        if seen != list(range(len(seen))):
            raise ValueError("leaves must partition the dimensions")

    @property
    def ndim(self) -> int:
        return len(self.nodes[0].dims)

    @property
    def leaf_of(self) -> dict[int, int]:
        return {n.dims[0]: i for i, n in enumerate(self.nodes) if n.is_leaf}


def balanced_tree(ndim: int) -> DimensionTree:
    """Split each node's dimension run in half, left child taking the floor."""
    if ndim < 1:
        raise ValueError("need at least one dimension")
    nodes: list[TreeNode | None] = []

    def build(dims: tuple[int, ...], parent: int) -> int:
        idx = len(nodes)
        nodes.append(None)
        if len(dims) == 1:
            nodes[idx] = TreeNode(dims, parent, -1, -1)
        else:
            half = len(dims) // 2
            left = build(dims[:half], idx)
            right = build(dims[half:], idx)
            nodes[idx] = TreeNode(dims, parent, left, right)
        return idx

    build(tuple(range(ndim)), -1)
    return DimensionTree(tuple(nodes))


@dataclass
class HTTensor:
    """``frames[i]`` is set exactly on leaf nodes, ``transfers[i]`` exactly on
    interior nodes; the unused slots hold None."""

    specs: tuple[BasisSpec, ...]
    tree: DimensionTree
    frames: list[np.ndarray | None]
    transfers: list[np.ndarray | None]

    def __post_init__(self):
        self.specs = tuple(self.specs)
        if self.tree.ndim != len(self.specs):
            raise ValueError("tree does not cover the specs")
        ranks = [0] * len(self.tree.nodes)
        for i, node in enumerate(self.tree.nodes):
            if node.is_leaf:
                u = np.ascontiguousarray(self.frames[i], dtype=complex)
                if u.ndim != 2 or u.shape[0] != self.specs[node.dims[0]].Q:
                    raise ValueError(f"bad frame shape at node {i}: {u.shape}")
                self.frames[i] = u
                ranks[i] = u.shape[1]
        for i in reversed(range(len(self.tree.nodes))):
            node = self.tree.nodes[i]
            if node.is_leaf:
                continue
            b = np.ascontiguousarray(self.transfers[i], dtype=complex)
            if b.ndim != 3 or b.shape[:2] != (ranks[node.left], ranks[node.right]):
                raise ValueError(f"bad transfer shape at node {i}: {b.shape}")
            self.transfers[i] = b
            ranks[i] = b.shape[2]
        if ranks[0] != 1:
            raise ValueError("root rank must be 1")
        self._ranks = tuple(ranks)

    @property
    def ndim(self) -> int:
        return len(self.specs)

    @property
    def ranks(self) -> tuple[int, ...]:
        return self._ranks

    @property
    def max_rank(self) -> int:
        return max(self._ranks[1:]) if len(self._ranks) > 1 else 1

    def copy(self) -> "HTTensor":
        return HTTensor(self.specs, self.tree,
                        [None if u is None else u.copy() for u in self.frames],
                        [None if b is None else b.copy() for b in self.transfers])

    def evaluate(self, z):
        return evaluate(self, z)

    def norm(self) -> float:
        return norm(self)


def _check_compatible(h1: HTTensor, h2: HTTensor) -> None:
    if h1.specs != h2.specs or h1.tree != h2.tree:
        raise ValueError("operands live on different trees or domains")


def from_cp(f: CPTensor, tree: DimensionTree | None = None) -> HTTensor:
    """Exact conversion; every node rank equals the separation rank."""
    tree = tree or balanced_tree(f.ndim)
    r = f.rank
    frames: list[np.ndarray | None] = [None] * len(tree.nodes)
    transfers: list[np.ndarray | None] = [None] * len(tree.nodes)
    if f.ndim == 1:
        # degenerate tree: the root leaf holds the summed coefficient vector
        frames[0] = f.factors[0].sum(axis=1, keepdims=True)
        return HTTensor(f.specs, tree, frames, transfers)
    diag = np.zeros((r, r, r), dtype=complex)
    diag[np.arange(r), np.arange(r), np.arange(r)] = 1.0
    for i, node in enumerate(tree.nodes):
        if node.is_leaf:
            frames[i] = f.factors[node.dims[0]].copy()
        elif i == 0:
            root = np.zeros((r, r, 1), dtype=complex)
            root[np.arange(r), np.arange(r), 0] = 1.0
            transfers[i] = root
        else:
            transfers[i] = diag.copy()
    return HTTensor(f.specs, tree, frames, transfers)


def evaluate(h: HTTensor, z) -> complex | np.ndarray:
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 1
    pts = z[None, :] if scalar else z
    if pts.shape[1] != h.ndim:
        raise ValueError(f"points have {pts.shape[1]} coordinates, need {h.ndim}")
    vals: list[np.ndarray | None] = [None] * len(h.tree.nodes)
    for i in reversed(range(len(h.tree.nodes))):
        node = h.tree.nodes[i]
        if node.is_leaf:
            phi = eval_basis(h.specs[node.dims[0]], pts[:, node.dims[0]])
            vals[i] = phi @ h.frames[i]
        else:
            vals[i] = np.einsum("abi,ma,mb->mi", h.transfers[i],
                                vals[node.left], vals[node.right], optimize=True)
    out = vals[0][:, 0]
    return complex(out[0]) if scalar else out


def add(h1: HTTensor, h2: HTTensor) -> HTTensor:
    _check_compatible(h1, h2)
    frames: list[np.ndarray | None] = [None] * len(h1.tree.nodes)
    transfers: list[np.ndarray | None] = [None] * len(h1.tree.nodes)
    if h1.ndim == 1:
        frames[0] = h1.frames[0] + h2.frames[0]
        return HTTensor(h1.specs, h1.tree, frames, transfers)
    for i, node in enumerate(h1.tree.nodes):
        if node.is_leaf:
            frames[i] = np.hstack([h1.frames[i], h2.frames[i]])
            continue
        a, b = h1.transfers[i], h2.transfers[i]
        if i == 0:
            # root keeps rank 1: the two weight blocks land in the same slice
            blk = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1], 1),
                           dtype=complex)
            blk[:a.shape[0], :a.shape[1], 0] = a[:, :, 0]
            blk[a.shape[0]:, a.shape[1]:, 0] = b[:, :, 0]
        else:
            blk = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1],
                            a.shape[2] + b.shape[2]), dtype=complex)
            blk[:a.shape[0], :a.shape[1], :a.shape[2]] = a
            blk[a.shape[0]:, a.shape[1]:, a.shape[2]:] = b
        transfers[i] = blk
    return HTTensor(h1.specs, h1.tree, frames, transfers)


def scale(h: HTTensor, c: complex) -> HTTensor:
    out = h.copy()
    if out.tree.nodes[0].is_leaf:
        out.frames[0] = out.frames[0] * c
    else:
        out.transfers[0] = out.transfers[0] * c
    return out


def apply_operator(op: SeparableOperator, h: HTTensor) -> HTTensor:
    if len(op.specs) != h.ndim:
        raise ValueError("operator and tensor dimension mismatch")
    leaf_of = h.tree.leaf_of
    terms = []
    for t in range(op.n_terms):
        term = h.copy()
        for k, kind in enumerate(op.factors[t]):
            if kind == FactorKind.IDENTITY:
                continue
            i = leaf_of[k]
            term.frames[i] = factor_matrix(h.specs[k], kind) @ term.frames[i]
        terms.append(scale(HTTensor(h.specs, h.tree, term.frames, term.transfers),
                           op.weights[t]))
    out = terms[0]
    for term in terms[1:]:
        out = add(out, term)
    return out


def inner_product(h1: HTTensor, h2: HTTensor) -> complex:
    """Conjugates the first argument, like the CP version."""
    _check_compatible(h1, h2)
    grams: list[np.ndarray | None] = [None] * len(h1.tree.nodes)
    for i in reversed(range(len(h1.tree.nodes))):
        node = h1.tree.nodes[i]
        if node.is_leaf:
            grams[i] = h1.frames[i].conj().T @ h2.frames[i]
        else:
            grams[i] = np.einsum("abi,ac,bd,cdj->ij", h1.transfers[i].conj(),
                                 grams[node.left], grams[node.right],
                                 h2.transfers[i], optimize=True)
    return complex(grams[0][0, 0])


def norm(h: HTTensor) -> float:
    if h.tree.nodes[0].is_leaf:
        return float(np.linalg.norm(h.frames[0]))
    return float(np.linalg.norm(orthogonalize(h).transfers[0]))


def _push_into_parent(out: HTTensor, idx: int, r: np.ndarray) -> None:
    parent = out.tree.nodes[idx].parent
    bp = out.transfers[parent]
    if out.tree.nodes[parent].left == idx:
        out.transfers[parent] = np.einsum("ca,abi->cbi", r, bp, optimize=True)
    else:
        out.transfers[parent] = np.einsum("cb,abi->aci", r, bp, optimize=True)


def orthogonalize(h: HTTensor) -> HTTensor:
    """Leaves-to-root QR sweep; afterwards every non-root frame (and every
    matricized non-root transfer) has orthonormal columns and the whole
    tensor's L2 norm equals the Frobenius norm of the root transfer."""
    out = h.copy()
    for i in reversed(range(1, len(out.tree.nodes))):
        node = out.tree.nodes[i]
        if node.is_leaf:
            q, r = np.linalg.qr(out.frames[i])
            out.frames[i] = q
        else:
            b = out.transfers[i]
            mat = b.reshape(b.shape[0] * b.shape[1], b.shape[2])
            q, r = np.linalg.qr(mat)
            out.transfers[i] = q.reshape(b.shape[0], b.shape[1], q.shape[1])
        _push_into_parent(out, i, r)
    return HTTensor(out.specs, out.tree, out.frames, out.transfers)


def truncate(h: HTTensor, r_max: int, eps: float) -> tuple[HTTensor, float]:
    """Reduce every node rank to at most ``r_max``, discarding components
    whose squared contribution stays below the per-node share of
    ``(eps * ||h||)^2``.  Returns the tensor and the estimate
    ``sqrt(sum of discarded squared singular values)``, an upper bound on
    the L2 error committed.
    """
    if r_max < 1:
        raise ValueError("rank cap must be at least 1")
    ortho = orthogonalize(h)
    nodes = ortho.tree.nodes
    if nodes[0].is_leaf:
        return ortho, 0.0
    total = float(np.linalg.norm(ortho.transfers[0]))
    if total == 0.0:
        return ortho, 0.0
    # distinct matricizations: one per node, minus root, minus one duplicate
    # (the root's two children describe the same split)
    budget = (eps * total) ** 2 / max(2 * ortho.ndim - 3, 1)

    grams: list[np.ndarray | None] = [None] * len(nodes)
    grams[0] = np.eye(1, dtype=complex)
    for i, node in enumerate(nodes):
        if node.is_leaf:
            continue
        b = ortho.transfers[i]
        grams[node.left] = np.einsum("abi,ij,cbj->ac", b, grams[i], b.conj(),
                                     optimize=True)
        grams[node.right] = np.einsum("abi,ij,acj->bc", b, grams[i], b.conj(),
                                      optimize=True)

    basis: list[np.ndarray] = [np.eye(1, dtype=complex)] * len(nodes)
    discarded = 0.0
    for i in range(1, len(nodes)):
        lam, w = np.linalg.eigh(0.5 * (grams[i] + grams[i].conj().T))
        lam, w = lam[::-1], w[:, ::-1]
        keep = lam.shape[0]
        tail = 0.0
        while keep > 1:
            step = max(float(lam[keep - 1]), 0.0)
            if keep > r_max or tail + step <= budget:
                tail += step
                keep -= 1
            else:
                break
        discarded += tail
        basis[i] = w[:, :keep]

    frames: list[np.ndarray | None] = [None] * len(nodes)
    transfers: list[np.ndarray | None] = [None] * len(nodes)
    for i, node in enumerate(nodes):
        if node.is_leaf:
            frames[i] = ortho.frames[i] @ basis[i]
        else:
            transfers[i] = np.einsum("abi,ac,bd,ie->cde", ortho.transfers[i],
                                     basis[node.left].conj(),
                                     basis[node.right].conj(),
                                     basis[i], optimize=True)
    return (HTTensor(ortho.specs, ortho.tree, frames, transfers),
            float(np.sqrt(max(discarded, 0.0))))
