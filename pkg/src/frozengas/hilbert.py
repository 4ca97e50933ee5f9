"""Reachable-sector bases and sparse rotating-frame Hamiltonians.

Three sector-restricted models are supported, each defined by its internal
alphabet and its allowed two-atom processes:

* ``TOY_EXCHANGE``: one s excitation among p atoms; the only process is the
  resonant swap p+s <-> s+p, so the sector is the n_atoms one-hot words.
* ``CASE_I``: alphabet (p, s, s'); an off-resonant pair creation
  pp <-> ss' (both orderings, detuning-controlled) plus the resonant swaps
  p+s <-> s+p and p+s' <-> s'+p.
* ``CASE_II``: alphabet (s, p, s', p'); the creation ss' <-> pp' plus swaps
  within each manifold, p+s <-> s+p and p'+s' <-> s'+p'.  Atoms never leave
  their initial manifold ({s,p} or {s',p'}).

The explicitly time-dependent creation coupling is removed by a rotating
frame whose bookkeeping is a diagonal detuning energy per created quantum:
+detuning per s atom in Case I and -detuning per p atom in Case II.  The
sign pairing is fixed so that the two-atom creation resonance peaks at zero
detuning; both conventions give spectra symmetric in detuning at the
two-atom level, and the many-body anisotropy asymmetry is tiny.

Basis states are occupation words over the alphabet, ordered
lexicographically with atom 0 as the most significant position; the
alphabet orderings above were chosen so the natural initial state of each
model sorts first.  Words pack into 2-bit fields of an int64 (n_atoms <= 31),
which makes sector closure and edge generation vectorizable; the toy model
bypasses packing since its one-hot sector is trivial at any size.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .geometry import AtomConfiguration, dipolar_coupling, pair_displacements

_MAX_PACKED_ATOMS = 31  # 2 bits per atom in a signed int64


class ModelCase(enum.Enum):
    TOY_EXCHANGE = "toy"
    CASE_I = "case1"
    CASE_II = "case2"


_ALPHABETS = {
    ModelCase.TOY_EXCHANGE: ("s", "p"),
    ModelCase.CASE_I: ("p", "s", "s'"),
    ModelCase.CASE_II: ("s", "p", "s'", "p'"),
}

# Digit each creation event adds one of; the diagonal counts these.
_COUNTER_DIGIT = {ModelCase.CASE_I: 1, ModelCase.CASE_II: 1}  # s and p resp.
_COUNTER_SIGN = {ModelCase.TOY_EXCHANGE: 0.0, ModelCase.CASE_I: 1.0, ModelCase.CASE_II: -1.0}

_CREATION, _EXCHANGE_1, _EXCHANGE_2 = 0, 1, 2

# Directed two-atom transitions (digit_in_j, digit_in_k, digit_out_j,
# digit_out_k, coupling kind).  Listing both directions of every process
# generates each off-diagonal matrix element exactly once.
_RULES = {
    ModelCase.CASE_I: (
        (0, 0, 1, 2, _CREATION),
        (0, 0, 2, 1, _CREATION),
        (1, 2, 0, 0, _CREATION),
        (2, 1, 0, 0, _CREATION),
        (0, 1, 1, 0, _EXCHANGE_1),
        (1, 0, 0, 1, _EXCHANGE_1),
        (0, 2, 2, 0, _EXCHANGE_2),
        (2, 0, 0, 2, _EXCHANGE_2),
    ),
    ModelCase.CASE_II: (
        (0, 2, 1, 3, _CREATION),
        (2, 0, 3, 1, _CREATION),
        (1, 3, 0, 2, _CREATION),
        (3, 1, 2, 0, _CREATION),
        (0, 1, 1, 0, _EXCHANGE_1),
        (1, 0, 0, 1, _EXCHANGE_1),
        (2, 3, 3, 2, _EXCHANGE_2),
        (3, 2, 2, 3, _EXCHANGE_2),
    ),
}


@dataclass(frozen=True)
class ModelSpec:
    """Physical case, dipole moments, detuning and process toggles."""

    case: ModelCase
    mu_sp: float = 1.0
    mu_sp_prime: float | None = None
    mu_s_prime_p_prime: float | None = None
    detuning: float = 0.0
    include_exchange: bool = True
    include_creation: bool = True

    def __post_init__(self):
        if not np.isfinite(self.detuning):
            raise ValueError("detuning must be finite")
        if not (np.isfinite(self.mu_sp) and self.mu_sp > 0):
            raise ValueError("mu_sp must be finite and > 0")
        if self.case is ModelCase.TOY_EXCHANGE:
            if not self.include_exchange:
                raise ValueError("the toy model is pure exchange; cannot disable it")
        elif self.case is ModelCase.CASE_I:
            if self.mu_sp_prime is None or self.mu_sp_prime <= 0:
                raise ValueError("Case I requires mu_sp_prime > 0")
        elif self.case is ModelCase.CASE_II:
            if self.mu_s_prime_p_prime is None or self.mu_s_prime_p_prime <= 0:
                raise ValueError("Case II requires mu_s_prime_p_prime > 0")
        if not (self.include_exchange or self.include_creation):
            raise ValueError("at least one of exchange/creation must be enabled")

    @property
    def alphabet(self) -> tuple[str, ...]:
        return _ALPHABETS[self.case]

    @property
    def vbar(self) -> float:
        """Mean interaction strength at unit density: the energy unit."""
        if self.case is ModelCase.TOY_EXCHANGE:
            return self.mu_sp**2
        if self.case is ModelCase.CASE_I:
            return self.mu_sp * self.mu_sp_prime
        return self.mu_sp * self.mu_s_prime_p_prime

    def coupling_constants(self) -> np.ndarray:
        """c_d per coupling kind (creation, exchange_1, exchange_2)."""
        if self.case is ModelCase.TOY_EXCHANGE:
            return np.array([0.0, self.mu_sp**2, 0.0])
        second = (
            self.mu_sp_prime
            if self.case is ModelCase.CASE_I
            else self.mu_s_prime_p_prime
        )
        return np.array([self.mu_sp * second, self.mu_sp**2, second**2])

    def active_rules(self):
        rules = _RULES[self.case]
        keep = []
        for rule in rules:
            if rule[4] == _CREATION and not self.include_creation:
                continue
            if rule[4] != _CREATION and not self.include_exchange:
                continue
            keep.append(rule)
        return tuple(keep)


def word_from_labels(labels, model: ModelSpec) -> np.ndarray:
    """Convert a sequence of state labels to alphabet digits."""
    alpha = model.alphabet
    try:
        return np.array([alpha.index(lab) for lab in labels], dtype=np.uint8)
    except ValueError:
        raise ValueError(f"labels must be drawn from {alpha}") from None


def all_p_word(n_atoms: int) -> np.ndarray:
    """Case I initial state: every atom in p."""
    return np.zeros(n_atoms, dtype=np.uint8)


def species_split_word(n_first: int, n_second: int) -> np.ndarray:
    """Case II initial state: n_first atoms in s then n_second in s'."""
    return np.concatenate(
        [np.zeros(n_first, dtype=np.uint8), np.full(n_second, 2, dtype=np.uint8)]
    )


def single_excitation_word(n_atoms: int, atom: int = 0) -> np.ndarray:
    """Toy initial state: one s (digit 0) at ``atom``, the rest p."""
    word = np.ones(n_atoms, dtype=np.uint8)
    word[atom] = 0
    return word


def _bit_shifts(n_atoms: int) -> np.ndarray:
    # atom 0 occupies the most significant 2-bit field
    return 2 * np.arange(n_atoms - 1, -1, -1, dtype=np.int64)


def _encode(words: np.ndarray, n_atoms: int) -> np.ndarray:
    shifts = _bit_shifts(n_atoms)
    return (words.astype(np.int64) << shifts).sum(axis=-1)


def _decode(codes: np.ndarray, n_atoms: int) -> np.ndarray:
    shifts = _bit_shifts(n_atoms)
    return ((codes[:, None] >> shifts) & 3).astype(np.uint8)


def creation_counter(word, model: ModelSpec) -> int:
    """Number of created quanta in a state: N_s (Case I), N_p (Case II), 0 (toy)."""
    if model.case is ModelCase.TOY_EXCHANGE:
        return 0
    digit = _COUNTER_DIGIT[model.case]
    return int(np.count_nonzero(np.asarray(word) == digit))


@dataclass(frozen=True)
class SectorBasis:
    """Ordered basis of the sector reachable from one initial occupation."""

    model: ModelSpec
    n_atoms: int
    occupations: np.ndarray  # (dim, n_atoms) uint8, lexicographically ascending
    codes: np.ndarray | None  # packed int64 words, ascending; None for the toy

    @property
    def dim(self) -> int:
        return self.occupations.shape[0]

    def index_of_word(self, word) -> int:
        w = np.asarray(word, dtype=np.uint8)
        if w.shape != (self.n_atoms,):
            raise ValueError(f"word must have length {self.n_atoms}")
        if self.codes is None:
            # toy sector: basis index equals the atom holding the s (digit 0)
            (pos,) = np.nonzero(w == 0)
            if pos.size != 1 or np.any(w[w != 0] != 1):
                raise ValueError("toy words carry exactly one s among p atoms")
            return int(pos[0])
        code = int(_encode(w[None, :], self.n_atoms)[0])
        idx = int(np.searchsorted(self.codes, code))
        if idx >= self.dim or self.codes[idx] != code:
            raise KeyError("word is not in the enumerated sector")
        return idx

    @cached_property
    def creation_counters(self) -> np.ndarray:
        if self.model.case is ModelCase.TOY_EXCHANGE:
            return np.zeros(self.dim, dtype=np.int64)
        digit = _COUNTER_DIGIT[self.model.case]
        return (self.occupations == digit).sum(axis=1).astype(np.int64)

    def species_counts(self, species: str) -> np.ndarray:
        """Per-state count of atoms in ``species``."""
        alpha = self.model.alphabet
        if species not in alpha:
            raise ValueError(f"unknown species {species!r}; alphabet is {alpha}")
        return (self.occupations == alpha.index(species)).sum(axis=1).astype(np.int64)

    @cached_property
    def template(self) -> "HamiltonianTemplate":
        return HamiltonianTemplate(self)


def _validate_initial(model: ModelSpec, word: np.ndarray):
    if model.case is ModelCase.TOY_EXCHANGE:
        if np.count_nonzero(word == 0) != 1 or np.any(word > 1):
            raise ValueError("toy initial state must be one s among p atoms")
    elif model.case is ModelCase.CASE_I:
        if np.any(word != 0):
            raise ValueError("Case I initial state must be all p")
    else:
        if not np.all((word == 0) | (word == 2)):
            raise ValueError("Case II initial state must contain only s and s'")


def enumerate_basis(model: ModelSpec, n_atoms: int, initial_occupation) -> SectorBasis:
    """Breadth-first closure of the two-atom processes from an initial word.

    Returns every reachable occupation word, sorted; the ordering (and hence
    every matrix built on it) is reproducible across runs and platforms.
    """
    word = np.asarray(initial_occupation, dtype=np.uint8)
    if word.shape != (n_atoms,):
        raise ValueError(f"initial occupation must have length {n_atoms}")
    if word.max(initial=0) >= len(model.alphabet):
        raise ValueError("initial occupation uses digits outside the alphabet")
    _validate_initial(model, word)

    if model.case is ModelCase.TOY_EXCHANGE:
        occ = np.ones((n_atoms, n_atoms), dtype=np.uint8)
        np.fill_diagonal(occ, 0)
        occ.setflags(write=False)
        return SectorBasis(model=model, n_atoms=n_atoms, occupations=occ, codes=None)

    if n_atoms > _MAX_PACKED_ATOMS:
        raise ValueError(
            f"packed enumeration supports n_atoms <= {_MAX_PACKED_ATOMS}"
        )

    shifts = _bit_shifts(n_atoms)
    rules = model.active_rules()
    i_idx, j_idx = np.triu_indices(n_atoms, k=1)

    visited = _encode(word[None, :], n_atoms)
    frontier = visited.copy()
    while frontier.size:
        produced = []
        for j, k in zip(i_idx, j_idx):
            sj, sk = shifts[j], shifts[k]
            aj = (frontier >> sj) & 3
            bk = (frontier >> sk) & 3
            for a_in, b_in, a_out, b_out, _ in rules:
                mask = (aj == a_in) & (bk == b_in)
                if not mask.any():
                    continue
                step = ((a_out - a_in) << sj) + ((b_out - b_in) << sk)
                produced.append(frontier[mask] + step)
        if not produced:
            break
        candidates = np.unique(np.concatenate(produced))
        frontier = np.setdiff1d(candidates, visited, assume_unique=True)
        visited = np.union1d(visited, frontier)

    occ = _decode(visited, n_atoms)
    occ.setflags(write=False)
    visited.setflags(write=False)
    return SectorBasis(model=model, n_atoms=n_atoms, occupations=occ, codes=visited)


@dataclass(frozen=True)
class SparseHamiltonian:
    """Rotating-frame Hamiltonian for one atom configuration.

    All couplings are real; the matrix is stored complex so the evolution
    kernel multiplies without per-call dtype promotion.
    """

    dim: int
    matrix: sp.csr_matrix
    detuning: float
    min_pair_distance: float
    norm_bound: float  # infinity norm; upper bound on the spectral radius

    def to_coordinate_text(self, path):
        """Dump nonzeros as 'row col value' lines for external checking."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write(f"# dim={self.dim} nnz={coo.nnz}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v.real:.17g}\n")


class HamiltonianTemplate:
    """Sparsity pattern of a sector, reusable across configurations.

    The pattern (which states couple, through which atom pair and process)
    depends only on the basis.  Assembling the matrix for a configuration
    or a new detuning is then a gather over precomputed indices, which is
    what makes detuning scans and moving-atom rebuilds affordable.
    """

    def __init__(self, basis: SectorBasis):
        self.basis = basis
        model = basis.model
        n = basis.n_atoms
        dim = basis.dim
        i_idx, j_idx = np.triu_indices(n, k=1)
        self.n_pairs = i_idx.size
        pair_id_of = {}
        for pid, (a, b) in enumerate(zip(i_idx, j_idx)):
            pair_id_of[(int(a), int(b))] = pid

        rows, cols, pair_ids, kinds = [], [], [], []
        if model.case is ModelCase.TOY_EXCHANGE:
            # basis index == atom holding the s; every pair couples directly
            for (a, b), pid in pair_id_of.items():
                rows.append(np.array([a, b], dtype=np.int64))
                cols.append(np.array([b, a], dtype=np.int64))
                pair_ids.append(np.full(2, pid, dtype=np.int32))
                kinds.append(np.full(2, _EXCHANGE_1, dtype=np.uint8))
        else:
            shifts = _bit_shifts(n)
            codes = basis.codes
            rules = model.active_rules()
            for (a, b), pid in pair_id_of.items():
                sa, sb = shifts[a], shifts[b]
                da = (codes >> sa) & 3
                db = (codes >> sb) & 3
                for a_in, b_in, a_out, b_out, kind in rules:
                    mask = (da == a_in) & (db == b_in)
                    if not mask.any():
                        continue
                    step = ((a_out - a_in) << sa) + ((b_out - b_in) << sb)
                    to_code = codes[mask] + step
                    to_idx = np.searchsorted(codes, to_code)
                    # sector-closure audit: every image must be in the basis
                    if np.any(to_idx >= dim) or np.any(codes[to_idx] != to_code):
                        raise AssertionError("process leaks out of the enumerated sector")
                    from_idx = np.nonzero(mask)[0]
                    rows.append(from_idx.astype(np.int64))
                    cols.append(to_idx.astype(np.int64))
                    pair_ids.append(np.full(from_idx.size, pid, dtype=np.int32))
                    kinds.append(np.full(from_idx.size, kind, dtype=np.uint8))

        empty = lambda dt: [np.empty(0, dtype=dt)]  # noqa: E731
        off_rows = np.concatenate(rows or empty(np.int64))
        off_cols = np.concatenate(cols or empty(np.int64))
        self.pair_index = np.concatenate(pair_ids or empty(np.int32))
        self.kind = np.concatenate(kinds or empty(np.uint8))
        self.n_off = off_rows.size

        all_rows = np.concatenate([off_rows, np.arange(dim, dtype=np.int64)])
        all_cols = np.concatenate([off_cols, np.arange(dim, dtype=np.int64)])
        # carry 1-based entry ids through the coo->csr reshuffle to learn
        # where each entry lands (ids stay nonzero so none can be pruned)
        entry_ids = np.arange(1, all_rows.size + 1, dtype=np.int64)
        skeleton = sp.coo_matrix(
            (entry_ids.astype(float), (all_rows, all_cols)), shape=(dim, dim)
        ).tocsr()
        if skeleton.nnz != all_rows.size:
            raise AssertionError("duplicate matrix entries in the pattern")
        self.indptr = skeleton.indptr
        self.indices = skeleton.indices
        self.csr_source = skeleton.data.astype(np.int64) - 1  # csr slot -> entry id
        self.counters = basis.creation_counters
        self.counter_sign = _COUNTER_SIGN[model.case]
        self.dim = dim

    def assemble(
        self,
        config: AtomConfiguration,
        detuning: float | None = None,
        model: ModelSpec | None = None,
    ) -> SparseHamiltonian:
        """Build the Hamiltonian for one configuration.

        ``model`` may override the dipole moments (same case and process
        set); ``detuning`` overrides the model's stored value, which is how
        a detuning scan reuses one template.
        """
        model = self.basis.model if model is None else model
        if model.case is not self.basis.model.case:
            raise ValueError("model case does not match the basis")
        if detuning is None:
            detuning = model.detuning
        if config.n_atoms != self.basis.n_atoms:
            raise ValueError("configuration size does not match the basis")

        _, disp = pair_displacements(config)
        r2 = np.sum(disp * disp, axis=1)
        afac = dipolar_coupling(disp, 1.0)
        cd = model.coupling_constants()[self.kind]
        values = np.empty(self.n_off + self.dim, dtype=np.complex128)
        values[: self.n_off] = afac[self.pair_index] * cd
        values[self.n_off :] = (self.counter_sign * detuning) * self.counters
        data = values[self.csr_source]
        matrix = sp.csr_matrix(
            (data, self.indices, self.indptr), shape=(self.dim, self.dim)
        )
        row_sums = np.add.reduceat(np.abs(data), self.indptr[:-1])
        return SparseHamiltonian(
            dim=self.dim,
            matrix=matrix,
            detuning=float(detuning),
            min_pair_distance=float(np.sqrt(r2.min())) if r2.size else np.inf,
            norm_bound=float(row_sums.max()) if data.size else 0.0,
        )


def build_hamiltonian(
    model: ModelSpec, basis: SectorBasis, config: AtomConfiguration
) -> SparseHamiltonian:
    """Assemble the rotating-frame matrix for one configuration."""
    return basis.template.assemble(config, detuning=model.detuning, model=model)
