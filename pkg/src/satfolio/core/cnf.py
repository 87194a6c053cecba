"""CNF formulas in DIMACS format: parsing, serialization and permutations.

A DIMACS file is made of optional comment lines starting with `c`, a single
`p cnf <nvars> <nclauses>` header, then whitespace-separated integers where `0`
terminates each clause. Clause order and literal order are kept exactly as read,
since solvers are sensitive to both.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from loguru import logger


class CnfFormatError(ValueError):
    """Base class for invalid DIMACS input"""


class MalformedHeader(CnfFormatError):
    pass


class LiteralOutOfRange(CnfFormatError):
    pass


class ClauseCountMismatch(CnfFormatError):
    pass


class EmptyClause(CnfFormatError):
    pass


@dataclass(frozen=True)
class CnfInstance:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    source_id: str = field(default="", compare=False)

    def __post_init__(self):
        # Accept lists for convenience, store tuples so instances are immutable
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        if self.num_vars < 1:
            raise MalformedHeader(f"Number of variables must be positive: {self.num_vars}")
        for i, clause in enumerate(self.clauses):
            if len(clause) == 0:
                raise EmptyClause(f"Clause {i} is empty")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise LiteralOutOfRange(
                        f"Literal {lit} of clause {i} is outside [1, {self.num_vars}]"
                    )

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def num_literals(self) -> int:
        """Total number of literal occurrences"""
        return sum(len(c) for c in self.clauses)


def literal_node_index(lit: int) -> int:
    """Dense literal index: 2*(var-1) for x_var, 2*(var-1)+1 for its negation"""
    return 2 * (abs(lit) - 1) + (1 if lit < 0 else 0)


def _parse_header(tokens: list[str], line_number: int) -> tuple[int, int]:
    if len(tokens) != 4 or tokens[1] != "cnf":
        raise MalformedHeader(f"Invalid header on line {line_number}: `{' '.join(tokens)}`")
    try:
        num_vars, num_clauses = int(tokens[2]), int(tokens[3])
    except ValueError:
        raise MalformedHeader(
            f"Non-integer values in header on line {line_number}: `{' '.join(tokens)}`"
        ) from None
    if num_vars < 1 or num_clauses < 0:
        raise MalformedHeader(f"Invalid counts in header on line {line_number}")
    return num_vars, num_clauses


def parse_dimacs(text: bytes | str, source_id: str = "") -> CnfInstance:
    """Parses DIMACS text into a CnfInstance.

    A trailing clause without its terminating `0` at the end of the input is
    accepted. A `%` token ends the clause section (SATLIB convention) and tokens
    left after the declared number of clauses are dropped, both with a warning.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedHeader(f"Input is not valid UTF-8 text: {e}") from None

    header = None
    clauses = []
    current_clause = []
    ignored_tokens = 0
    stop = False

    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("c"):
            continue

        if tokens[0] == "p":
            if header is not None:
                raise MalformedHeader(f"Duplicate header on line {line_number}")
            header = _parse_header(tokens, line_number)
            continue

        if header is None:
            raise MalformedHeader(f"Clause data before header on line {line_number}")

        num_vars, num_clauses = header
        for token in tokens:
            if stop:
                ignored_tokens += 1
                continue
            if token == "%":
                logger.warning(f"`%` terminator found on line {line_number}")
                stop = True
                continue
            try:
                lit = int(token)
            except ValueError:
                raise MalformedHeader(
                    f"Non-integer token `{token}` on line {line_number}"
                ) from None

            if len(clauses) == num_clauses:
                # Legacy benchmarks sometimes carry garbage after the last clause
                current_clause.append(lit)
                if lit == 0:
                    raise ClauseCountMismatch(
                        f"Header declares {num_clauses} clauses, found more"
                    )
                continue

            if lit == 0:
                if len(current_clause) == 0:
                    raise EmptyClause(f"Empty clause on line {line_number}")
                clauses.append(current_clause)
                current_clause = []
            elif abs(lit) > num_vars:
                raise LiteralOutOfRange(
                    f"Literal {lit} on line {line_number} exceeds {num_vars} variables"
                )
            else:
                current_clause.append(lit)

    if header is None:
        raise MalformedHeader("Missing `p cnf` header")
    num_vars, num_clauses = header

    if current_clause:
        if len(clauses) < num_clauses:
            clauses.append(current_clause)
        else:
            ignored_tokens += len(current_clause)
    if ignored_tokens:
        logger.warning(f"Ignored {ignored_tokens} trailing tokens after the last clause")

    if len(clauses) != num_clauses:
        raise ClauseCountMismatch(
            f"Header declares {num_clauses} clauses, found {len(clauses)}"
        )

    return CnfInstance(num_vars=num_vars, clauses=clauses, source_id=source_id)


def serialize_dimacs(inst: CnfInstance) -> bytes:
    lines = [f"p cnf {inst.num_vars} {inst.num_clauses}"]
    lines += [" ".join(str(lit) for lit in clause) + " 0" for clause in inst.clauses]
    return ("\n".join(lines) + "\n").encode("ascii")


def load_dimacs(path: Path | str) -> CnfInstance:
    path = Path(path)
    with open(path, "rb") as f:
        return parse_dimacs(f.read(), source_id=path.stem)


def save_dimacs(inst: CnfInstance, path: Path | str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(serialize_dimacs(inst))


class PermutationKind(str, Enum):
    CLAUSE_SHUFFLE = "clause_shuffle"
    VARIABLE_SHUFFLE = "variable_shuffle"


@dataclass(frozen=True)
class PermutationSpec:
    kind: PermutationKind
    seed: int

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"Seed must be a 64-bit unsigned integer: {self.seed}")


def apply_variable_mapping(inst: CnfInstance, mapping: list[int] | np.ndarray) -> CnfInstance:
    """Relabels variables with `mapping[v-1]` (a permutation of 1..num_vars),
    keeping signs, clause order and literal order"""
    clauses = [
        [int(mapping[abs(lit) - 1]) * (1 if lit > 0 else -1) for lit in clause]
        for clause in inst.clauses
    ]
    return CnfInstance(num_vars=inst.num_vars, clauses=clauses, source_id=inst.source_id)


def permute(inst: CnfInstance, spec: PermutationSpec) -> CnfInstance:
    """Returns a new instance with shuffled clauses or relabeled variables.
    The result only depends on the instance and `spec`."""
    rng = np.random.default_rng(spec.seed)

    if spec.kind == PermutationKind.CLAUSE_SHUFFLE:
        order = rng.permutation(inst.num_clauses)
        clauses = [inst.clauses[i] for i in order]
        return CnfInstance(num_vars=inst.num_vars, clauses=clauses, source_id=inst.source_id)

    mapping = rng.permutation(inst.num_vars) + 1
    return apply_variable_mapping(inst, mapping)
