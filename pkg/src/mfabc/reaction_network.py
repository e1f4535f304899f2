"""Parameterised stochastic reaction networks and the two benchmark models.

A network is a list of reactions with closed-form rate laws: mass action,
optionally multiplied by a Hill repression factor and offset by a basal
rate.  Rate constants may be numbers or names of parameters, so a network
together with a parameter dictionary fully determines the propensities and
the whole definition can be written to and read from a config file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

Number = Union[int, float]
RateTerm = Union[Number, str]

#: Largest count any species may reach before a simulation aborts.
COUNT_LIMIT = 2**31 - 1


class OverflowGuardError(RuntimeError):
    """A species count exceeded :data:`COUNT_LIMIT` during simulation."""


def hill_repression(p, K, n):
    """Fraction of maximal transcription left at repressor level ``p``.

    Computes ``K**n / (K**n + p**n)`` in the overflow-safe form
    ``1 / (1 + (p / K)**n)``.
    """
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + (np.asarray(p, dtype=float) / K) ** n)


@dataclass(frozen=True)
class HillRepression:
    """Multiplicative Hill repression factor on a reaction rate.

    Attributes:
        species: Name of the repressing species.
        K: Half-saturation constant (number or parameter name).
        n: Hill coefficient (number or parameter name).
    """

    species: str
    K: RateTerm
    n: RateTerm


@dataclass(frozen=True)
class Reaction:
    """A single reaction channel.

    The propensity is ``basal + rate * h(x) * hill``, where ``h(x)`` is the
    mass-action combinatorial factor of the reactants and ``hill`` is an
    optional repression factor.

    Attributes:
        reactants: Species name to stoichiometric coefficient consumed.
        products: Species name to stoichiometric coefficient produced.
        rate: Rate constant, either a number or a parameter name.
        basal: Constant propensity added to the rate law.
        hill: Optional repression factor.
        fast: Marks the channel for approximate treatment in hybrid
            simulators.
        label: Human readable description.
    """

    reactants: Mapping[str, int]
    products: Mapping[str, int]
    rate: RateTerm
    basal: RateTerm = 0.0
    hill: HillRepression | None = None
    fast: bool = False
    label: str = ""


@dataclass(frozen=True)
class RateLaw:
    """Numeric arrays describing every propensity for one parameter set.

    This is the form consumed by the compiled simulation kernels.
    """

    reactant_index: np.ndarray  # (M, 2) species indices, -1 for none
    rate: np.ndarray
    basal: np.ndarray
    hill_species: np.ndarray  # -1 for no Hill factor
    hill_K: np.ndarray
    hill_n: np.ndarray

    def as_tuple(self):
        return (self.reactant_index, self.rate, self.basal,
                self.hill_species, self.hill_K, self.hill_n)


@dataclass(frozen=True)
class ReactionNetwork:
    """Stoichiometry, rate laws, initial state and time horizon.

    Attributes:
        species: Species names, fixing the order of state vectors.
        reactions: Reaction channels, fixing the order of propensities.
        initial_state: Initial molecule counts.
        t_final: Simulation horizon.
        parameters: Default parameter values, overridden per call.
        name: Model label.
    """

    species: tuple
    reactions: tuple
    initial_state: tuple
    t_final: float
    parameters: Mapping[str, float] = field(default_factory=dict)
    name: str = "network"

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        object.__setattr__(self, "initial_state", tuple(int(v) for v in self.initial_state))
        object.__setattr__(self, "parameters", dict(self.parameters))
        if len(self.initial_state) != len(self.species):
            raise ValueError("initial_state length does not match species")
        if any(v < 0 for v in self.initial_state):
            raise ValueError("initial_state must be non-negative")
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        known = set(self.species)
        for rxn in self.reactions:
            names = set(rxn.reactants) | set(rxn.products)
            if rxn.hill is not None:
                names.add(rxn.hill.species)
            unknown = names - known
            if unknown:
                raise ValueError(f"reaction {rxn.label!r} uses unknown species {sorted(unknown)}")
            if sum(rxn.reactants.values()) > 2:
                raise ValueError("at most bimolecular reactions are supported")

    @property
    def species_count(self):
        return len(self.species)

    @property
    def reaction_count(self):
        return len(self.reactions)

    @property
    def x0(self):
        return np.array(self.initial_state, dtype=np.int64)

    @property
    def stoich(self):
        """Integer matrix of shape (N, M); column j is the net change of reaction j."""
        idx = {s: i for i, s in enumerate(self.species)}
        nu = np.zeros((self.species_count, self.reaction_count), dtype=np.int64)
        for j, rxn in enumerate(self.reactions):
            for s, c in rxn.reactants.items():
                nu[idx[s], j] -= c
            for s, c in rxn.products.items():
                nu[idx[s], j] += c
        return nu

    @property
    def fast_mask(self):
        return np.array([r.fast for r in self.reactions], dtype=bool)

    def resolve(self, params: Mapping[str, float] | None = None) -> dict:
        """Merge ``params`` over the default parameter values."""
        merged = dict(self.parameters)
        if params is not None:
            merged.update({k: float(v) for k, v in dict(params).items()})
        return merged

    def rate_law(self, params: Mapping[str, float] | None = None) -> RateLaw:
        """Evaluate every rate term for the given parameters."""
        values = self.resolve(params)

        def num(term):
            if isinstance(term, str):
                try:
                    return float(values[term])
                except KeyError:
                    raise KeyError(f"parameter {term!r} has no value") from None
            return float(term)

        idx = {s: i for i, s in enumerate(self.species)}
        M = self.reaction_count
        reac = -np.ones((M, 2), dtype=np.int64)
        rate = np.zeros(M)
        basal = np.zeros(M)
        hill_sp = -np.ones(M, dtype=np.int64)
        hill_K = np.ones(M)
        hill_n = np.ones(M)
        for j, rxn in enumerate(self.reactions):
            slots = [idx[s] for s, c in rxn.reactants.items() for _ in range(c)]
            reac[j, : len(slots)] = slots
            rate[j] = num(rxn.rate)
            basal[j] = num(rxn.basal)
            if rxn.hill is not None:
                hill_sp[j] = idx[rxn.hill.species]
                hill_K[j] = num(rxn.hill.K)
                hill_n[j] = num(rxn.hill.n)
        if np.any(rate < 0) or np.any(basal < 0) or np.any(hill_K <= 0):
            raise ValueError("rate constants must be non-negative and Hill constants positive")
        return RateLaw(reac, rate, basal, hill_sp, hill_K, hill_n)

    def propensity(self, x, params: Mapping[str, float] | None = None) -> np.ndarray:
        """Propensity vector at state ``x`` (reference implementation in numpy)."""
        law = self.rate_law(params)
        x = np.asarray(x, dtype=float)
        out = law.rate.copy()
        for j in range(self.reaction_count):
            s0, s1 = law.reactant_index[j]
            if s0 >= 0:
                if s1 == s0:
                    out[j] *= x[s0] * (x[s0] - 1.0) / 2.0
                else:
                    out[j] *= x[s0]
                    if s1 >= 0:
                        out[j] *= x[s1]
            if law.hill_species[j] >= 0:
                out[j] *= hill_repression(x[law.hill_species[j]], law.hill_K[j], law.hill_n[j])
        return law.basal + out

    def to_dict(self) -> dict:
        def rxn_dict(r):
            d = {"reactants": dict(r.reactants), "products": dict(r.products),
                 "rate": r.rate, "basal": r.basal, "fast": r.fast, "label": r.label}
            if r.hill is not None:
                d["hill"] = {"species": r.hill.species, "K": r.hill.K, "n": r.hill.n}
            return d

        return {"name": self.name, "species": list(self.species),
                "reactions": [rxn_dict(r) for r in self.reactions],
                "initial_state": list(self.initial_state), "t_final": self.t_final,
                "parameters": dict(self.parameters)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ReactionNetwork":
        reactions = []
        for r in d["reactions"]:
            hill = HillRepression(**r["hill"]) if r.get("hill") else None
            reactions.append(Reaction(reactants=dict(r.get("reactants", {})),
                                      products=dict(r.get("products", {})),
                                      rate=r["rate"], basal=r.get("basal", 0.0), hill=hill,
                                      fast=bool(r.get("fast", False)), label=r.get("label", "")))
        return cls(species=d["species"], reactions=reactions,
                   initial_state=d["initial_state"], t_final=float(d["t_final"]),
                   parameters=d.get("parameters", {}), name=d.get("name", "network"))


# ---------------------------------------------------------------------------
# parameters and priors


@dataclass(frozen=True)
class ParamVector:
    """Values of the free parameters, labelled by name."""

    names: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.shape != (len(self.names),):
            raise ValueError("names and values have different lengths")

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values.tolist()))

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])


@dataclass(frozen=True)
class Uniform:
    """Uniform distribution on ``[low, high]``; ``low == high`` is a point mass."""

    low: float
    high: float

    def __post_init__(self):
        if not self.high >= self.low:
            raise ValueError("Uniform requires high >= low")

    def sample(self, rng):
        return self.low + (self.high - self.low) * rng.random()

    def support(self):
        return self.low, self.high

    def density(self, v):
        if self.high == self.low:
            return math.inf if v == self.low else 0.0
        return 1.0 / (self.high - self.low) if self.low <= v <= self.high else 0.0

    def mean(self):
        return 0.5 * (self.low + self.high)

    def var(self):
        return (self.high - self.low) ** 2 / 12.0


@dataclass(frozen=True)
class LogScaledUniform:
    """``nominal * base**u`` with ``u ~ Uniform(-1, 1)``."""

    nominal: float
    base: float

    def __post_init__(self):
        if self.nominal <= 0 or self.base < 1:
            raise ValueError("LogScaledUniform requires nominal > 0 and base >= 1")

    def sample(self, rng):
        return self.nominal * self.base ** (2.0 * rng.random() - 1.0)

    def support(self):
        return self.nominal / self.base, self.nominal * self.base

    def density(self, v):
        lo, hi = self.support()
        if self.base == 1.0:
            return math.inf if v == self.nominal else 0.0
        if not lo <= v <= hi:
            return 0.0
        # u = log_b(v / nominal) has density 1/2 on [-1, 1]
        return 1.0 / (2.0 * v * math.log(self.base))

    def _moment(self, k):
        if self.base == 1.0:
            return self.nominal**k
        lb = k * math.log(self.base)
        return self.nominal**k * (self.base**k - self.base**-k) / (2.0 * lb)

    def mean(self):
        return self._moment(1)

    def var(self):
        return self._moment(2) - self._moment(1) ** 2


Distribution = Union[Uniform, LogScaledUniform]


@dataclass(frozen=True)
class Prior:
    """Independent priors on the free parameters plus fixed assignments."""

    components: Mapping[str, Distribution]
    fixed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "components", dict(self.components))
        object.__setattr__(self, "fixed", dict(self.fixed))
        clash = set(self.components) & set(self.fixed)
        if clash:
            raise ValueError(f"parameters both free and fixed: {sorted(clash)}")

    @property
    def names(self):
        return tuple(self.components)

    def sample(self, rng) -> ParamVector:
        """Draw one parameter vector, consuming draws in declaration order."""
        return ParamVector(self.names, [d.sample(rng) for d in self.components.values()])

    def sample_many(self, rng, size) -> np.ndarray:
        return np.array([self.sample(rng).values for _ in range(size)])

    def density(self, theta) -> float:
        values = theta.values if isinstance(theta, ParamVector) else np.asarray(theta, float)
        out = 1.0
        for v, d in zip(values, self.components.values()):
            out *= d.density(float(v))
        return out

    def full_params(self, theta) -> dict:
        """Fixed values merged with the free values of ``theta``."""
        values = theta.values if isinstance(theta, ParamVector) else np.asarray(theta, float)
        params = dict(self.fixed)
        params.update(zip(self.names, (float(v) for v in values)))
        return params


def sample_prior(prior: Prior, rng) -> ParamVector:
    """Draw one parameter vector from ``prior`` using the numpy Generator ``rng``."""
    return prior.sample(rng)


# ---------------------------------------------------------------------------
# benchmark models

REPRESSILATOR_NOMINAL = {"alpha0": 1.0, "alpha": 1000.0, "beta": 5.0, "n": 2.0, "K_h": 20.0}
VIRAL_NOMINAL = (1.0, 0.025, 100.0, 0.25, 1.9985, 7.5e-5)


def repressilator_model() -> ReactionNetwork:
    """Three-gene cyclic repression network.

    Species are ``m1, m2, m3, p1, p2, p3``.  Gene ``i`` is transcribed at rate
    ``alpha0 + alpha * f(p_j)`` with the repressor pairs (1, 3), (2, 1) and
    (3, 2), where ``f(p) = K_h**n / (K_h**n + p**n)``.  mRNA decays at unit
    rate, and both translation and protein decay occur at rate ``beta``.
    """
    species = ("m1", "m2", "m3", "p1", "p2", "p3")
    repressor = {1: 3, 2: 1, 3: 2}
    reactions = []
    for i in (1, 2, 3):
        reactions.append(Reaction({}, {f"m{i}": 1}, rate="alpha", basal="alpha0",
                                  hill=HillRepression(f"p{repressor[i]}", "K_h", "n"),
                                  label=f"transcription of m{i}"))
    for i in (1, 2, 3):
        reactions.append(Reaction({f"m{i}": 1}, {}, rate=1.0, label=f"decay of m{i}"))
    for i in (1, 2, 3):
        reactions.append(Reaction({f"m{i}": 1}, {f"m{i}": 1, f"p{i}": 1}, rate="beta",
                                  label=f"translation of p{i}"))
    for i in (1, 2, 3):
        reactions.append(Reaction({f"p{i}": 1}, {}, rate="beta", label=f"decay of p{i}"))
    return ReactionNetwork(species, reactions, (0, 0, 0, 40, 20, 60), 10.0,
                           parameters=REPRESSILATOR_NOMINAL, name="repressilator")


def repressilator_prior() -> Prior:
    return Prior({"n": Uniform(1.0, 4.0), "K_h": Uniform(10.0, 30.0)},
                 fixed={"alpha0": 1.0, "alpha": 1000.0, "beta": 5.0})


def viral_model() -> ReactionNetwork:
    """Intracellular viral infection kinetics.

    Species are ``template, genome, struct, virus``.  Reactions 3 and 5
    (struct production and decay) are flagged fast.
    """
    species = ("template", "genome", "struct", "virus")
    reactions = (
        Reaction({"template": 1}, {"template": 1, "genome": 1}, "k1", label="genome synthesis"),
        Reaction({"genome": 1}, {"template": 1}, "k2", label="template formation"),
        Reaction({"template": 1}, {"template": 1, "struct": 1}, "k3", fast=True,
                 label="struct synthesis"),
        Reaction({"template": 1}, {}, "k4", label="template decay"),
        Reaction({"struct": 1}, {}, "k5", fast=True, label="struct decay"),
        Reaction({"genome": 1, "struct": 1}, {"virus": 1}, "k6", label="virus assembly"),
    )
    params = {f"k{i + 1}": v for i, v in enumerate(VIRAL_NOMINAL)}
    return ReactionNetwork(species, reactions, (1, 0, 0, 0), 200.0, parameters=params,
                           name="viral")


def viral_prior(base: float = 1.5) -> Prior:
    return Prior({f"k{i + 1}": LogScaledUniform(v, base) for i, v in enumerate(VIRAL_NOMINAL)})

