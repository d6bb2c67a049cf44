"""Gibbs samplers for supervised clustering under a Dirichlet process prior.

A chain state tracks, per item, a cluster indicator c and a type indicator
d, plus the active cluster centers ("publications"), the active precision
vectors ("reference types"), and the two DP precisions.  Training items
keep their gold cluster forever; test items are resampled.  Three
variants:

- m1: fully conjugate updates (closed-form new-cluster marginals, exact
  posterior draws for active parameters).
- m2: as m1, but the gamma base over precisions is refitted to the
  current within-cluster variances at the start of every sweep.
- m3: non-conjugate machinery: new-parameter candidates drawn fresh from
  the base (auxiliary-candidate updates), active parameters refreshed by
  a short independence sampler, and, by default, the conditional type
  prior that ties precisions to the relative distances between centers.

All choice probabilities are computed in log space and normalized by max
subtraction.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .data import Dataset
from .dp import GammaPrior, sample_precision_single
from .errors import ConfigError, DomainError
from .gaussian import (
    LOG_2PI,
    PublicationBase,
    TypeBase,
    adapt_type_base,
    conditional_type_logdensity,
    data_loglik_rows,
    marginal_loglik_new_publication,
    pairwise_sq_diff_sum,
    posterior_sample_publication,
    posterior_sample_type,
    publication_base_logpdf,
    type_base_logpdf,
)
from .partition import Partition

VARIANTS = ("m1", "m2", "m3")


@dataclass
class SamplerConfig:
    variant: str = "m1"
    iterations: int = 2000
    burn_in: int | None = None  # default: iterations // 2
    aux_samples: int = 8  # fresh new-parameter candidates per update (m3)
    candidate_count: int = 32  # independence-sampler pool for active params (m3)
    share_train_test: bool = False
    resample_alphas: bool = True
    alpha_p: float = 1.0  # initial DP precision over clusters
    alpha_t: float = 1.0  # initial DP precision over types
    alpha_prior_p: GammaPrior = field(default_factory=GammaPrior)
    alpha_prior_t: GammaPrior = field(default_factory=GammaPrior)
    n_chains: int = 2
    seed: int = 0
    freeze_types: bool = False  # keep a single identity type, skip d updates
    ignore_labels: bool = False  # treat every item as test (unsupervised)
    conditional_type_prior: bool | None = None  # None: on iff variant == m3
    conditional_rate: float = 1.0
    pub_prior_variance: float = 1.0
    type_prior_shape: float = 1.0
    type_prior_scale: float = 1.0

    def resolved_burn_in(self):
        return self.iterations // 2 if self.burn_in is None else self.burn_in

    def uses_conditional_prior(self):
        if self.conditional_type_prior is None:
            return self.variant == "m3"
        return self.conditional_type_prior

    def validate(self, dataset: Dataset | None = None):
        """Every problem with this configuration, as human-readable strings."""
        errors = []
        if self.variant not in VARIANTS:
            errors.append(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.iterations < 1:
            errors.append(f"iterations must be >= 1, got {self.iterations}")
        if self.burn_in is not None and not (0 <= self.burn_in < self.iterations):
            errors.append(
                f"burn_in must satisfy 0 <= burn_in < iterations, got {self.burn_in}"
            )
        if self.aux_samples < 1:
            errors.append(f"aux_samples must be >= 1, got {self.aux_samples}")
        if self.candidate_count < 1:
            errors.append(f"candidate_count must be >= 1, got {self.candidate_count}")
        if self.n_chains < 1:
            errors.append(f"n_chains must be >= 1, got {self.n_chains}")
        if self.alpha_p <= 0 or self.alpha_t <= 0:
            errors.append("initial alpha values must be positive")
        if self.conditional_rate <= 0:
            errors.append(f"conditional_rate must be positive, got {self.conditional_rate}")
        if self.pub_prior_variance <= 0:
            errors.append("pub_prior_variance must be positive")
        if self.type_prior_shape <= 0 or self.type_prior_scale <= 0:
            errors.append("type prior shape/scale must be positive")
        if dataset is not None and self.resample_alphas:
            has_train = not self.ignore_labels and any(s == "train" for s in dataset.split)
            if not has_train:
                errors.append(
                    "resample_alphas needs labeled training data to form an (n, k) "
                    "observation; disable it for unsupervised runs"
                )
        return errors


@dataclass(frozen=True)
class SampleRecord:
    iteration: int
    test_partition: Partition
    joint_log_score: float
    n_publications: int
    n_types: int


def _pick(logw, rng):
    """Index drawn from unnormalized log weights (max-subtracted)."""
    w = np.exp(logw - logw.max())
    u = rng.random() * w.sum()
    acc = 0.0
    for i, wi in enumerate(w.tolist()):
        acc += wi
        if u < acc:
            return i
    return len(w) - 1


def normalized_probs(logw):
    w = np.exp(np.asarray(logw) - np.max(logw))
    return w / w.sum()


class ChainState:
    """Full latent state of one MCMC chain."""

    def __init__(self, dataset: Dataset, config: SamplerConfig, rng):
        problems = config.validate(dataset)
        if problems:
            raise ConfigError("; ".join(problems))
        self.config = config
        self.variant = config.variant
        self.rng = rng
        self.X = np.asarray(dataset.X, float)
        self.ids = list(dataset.ids)
        self.N, self.F = self.X.shape
        self.frozen_types = config.freeze_types
        self.conditional = config.uses_conditional_prior()

        if config.ignore_labels:
            self.is_test = np.ones(self.N, dtype=bool)
        else:
            self.is_test = np.array([s == "test" for s in dataset.split])
        self.test_indices = np.flatnonzero(self.is_test)

        self.pub_base = PublicationBase(
            mean=np.zeros(self.F), variance=config.pub_prior_variance
        )
        self.config_type_base = TypeBase(
            shape=np.full(self.F, config.type_prior_shape),
            scale=np.full(self.F, config.type_prior_scale),
        )
        self._set_type_base(self.config_type_base)

        # Training items are pinned to their gold classes for good.
        self.c = np.empty(self.N, dtype=np.int64)
        self.c_members: dict[int, set] = {}
        train_idx = np.flatnonzero(~self.is_test)
        train_labels = sorted({dataset.labels[i] for i in train_idx})
        self.train_label_to_cid = {lab: cid for cid, lab in enumerate(train_labels)}
        for i in train_idx:
            cid = self.train_label_to_cid[dataset.labels[i]]
            self.c[i] = cid
            self.c_members.setdefault(cid, set()).add(int(i))
        self.train_cluster_ids = frozenset(self.train_label_to_cid.values())
        next_c = len(train_labels)
        for i in self.test_indices:
            self.c[i] = next_c
            self.c_members[next_c] = {int(i)}
            next_c += 1
        self.next_c = next_c

        self.d = np.zeros(self.N, dtype=np.int64)
        self.d_members: dict[int, set] = {0: set(range(self.N))}
        self.next_t = 1

        self.alpha_p = config.alpha_p
        self.alpha_t = config.alpha_t
        if len(train_idx) > 0:
            k_train = len(train_labels)
            self.train_pair = (len(train_idx), k_train)
        else:
            self.train_pair = None

        self.iteration = 0
        self._init_params()

    # ------------------------------------------------------------------
    # initialization

    def _set_type_base(self, base):
        """Install a type base and precompute the new-type marginal's
        base-only constants (saves a gammaln pair per item update)."""
        self.type_base = base
        a, rate = base.shape, base.rate
        self._marg_const = float(
            (gammaln(a + 0.5) - gammaln(a) - 0.5 * LOG_2PI + a * np.log(rate)).sum()
        )
        self._marg_shape_half = a + 0.5
        self._marg_rate = rate

    def _init_params(self):
        if self.frozen_types:
            self.types = {0: np.ones(self.F)}
        else:
            base = self.type_base
            self.types = {0: self.rng.gamma(base.shape, base.scale)}
        self.pubs = {cid: self.pub_base.mean.copy() for cid in self.c_members}
        self._resample_publications()
        if not self.frozen_types:
            self._resample_types()

    # ------------------------------------------------------------------
    # parameter refreshes

    def _members_array(self, members):
        return np.fromiter(members, dtype=np.int64, count=len(members))

    def _resample_publications(self):
        if self.variant == "m3":
            self._resample_publications_sir()
            return
        for cid in list(self.pubs):
            idx = self._members_array(self.c_members[cid])
            rs = self.X[idx]
            ts = np.array([self.types[t] for t in self.d[idx]])
            self.pubs[cid] = posterior_sample_publication(rs, ts, self.pub_base, self.rng)

    def _resample_publications_sir(self):
        """Refresh each center from a pool of base draws weighted by its
        full conditional over the proposal density (the base cancels).

        Under the conditional type prior a center also enters every
        type's normalized prior: the pairwise tilt pulls it toward the
        other centers under the pooled precisions, while the normalizer
        term rewards configurations whose separation supports the
        observed types.
        """
        cfg = self.config
        base = self.pub_base
        if self.conditional:
            lam = cfg.conditional_rate
            n_types = len(self.types)
            t_sum = np.sum(list(self.types.values()), axis=0)
            a_base = self.type_base.shape
            r_base = self.type_base.rate
        for cid in list(self.pubs):
            idx = self._members_array(self.c_members[cid])
            ts = np.array([self.types[t] for t in self.d[idx]])
            a_vec = (ts * self.X[idx]).sum(axis=0)
            b_vec = ts.sum(axis=0)
            cands = self.rng.normal(base.mean, np.sqrt(base.variance), (cfg.candidate_count, self.F))
            logw = cands @ a_vec - 0.5 * (cands**2) @ b_vec
            if self.conditional:
                others = [p for other, p in self.pubs.items() if other != cid]
                if others:
                    d_sq = np.zeros((cfg.candidate_count, self.F))
                    for p_other in others:
                        d_sq += (cands - p_other) ** 2
                    s_rest = pairwise_sq_diff_sum(others)
                    shifted = r_base + lam * (s_rest + d_sq)
                    logw += n_types * (a_base * np.log(shifted)).sum(axis=1)
                    logw -= lam * d_sq @ t_sum
            self.pubs[cid] = cands[_pick(logw, self.rng)]

    def _resample_types(self):
        if self.variant == "m3":
            self._resample_types_sir()
            return
        for tid in list(self.types):
            idx = self._members_array(self.d_members[tid])
            rs = self.X[idx]
            ps = np.array([self.pubs[c] for c in self.c[idx]])
            self.types[tid] = posterior_sample_type(rs, ps, self.type_base, self.rng)

    def _resample_types_sir(self):
        cfg = self.config
        base = self.type_base
        if self.conditional:
            s_pair = pairwise_sq_diff_sum(list(self.pubs.values()))
        for tid in list(self.types):
            idx = self._members_array(self.d_members[tid])
            ps = np.array([self.pubs[c] for c in self.c[idx]])
            q = ((self.X[idx] - ps) ** 2).sum(axis=0)
            n_obs = len(idx)
            cands = self.rng.gamma(base.shape, base.scale, (cfg.candidate_count, self.F))
            logw = 0.5 * n_obs * np.log(cands).sum(axis=1) - 0.5 * cands @ q
            if self.conditional:
                logw = logw - cfg.conditional_rate * cands @ s_pair
            self.types[tid] = cands[_pick(logw, self.rng)]

    # ------------------------------------------------------------------
    # indicator updates

    def _detach_c(self, n):
        """Remove item n from its cluster; returns the orphaned center if
        the cluster emptied (it is garbage-collected immediately)."""
        cid = int(self.c[n])
        members = self.c_members[cid]
        members.discard(int(n))
        if not members:
            del self.c_members[cid]
            return self.pubs.pop(cid)
        return None

    def _c_candidates(self, n, orphan):
        """Existing-cluster ids plus log weights for resampling c_n; the
        trailing entries belong to new-cluster candidates."""
        r = self.X[n]
        t = self.types[int(self.d[n])]
        if self.config.share_train_test or not self.train_cluster_ids:
            cand = list(self.pubs.keys())
        else:
            cand = [cid for cid in self.pubs if cid not in self.train_cluster_ids]
        parts = []
        if cand:
            mat = np.array([self.pubs[cid] for cid in cand])
            counts = np.array([float(len(self.c_members[cid])) for cid in cand])
            parts.append(np.log(counts) + data_loglik_rows(r, mat, t))
        if self.variant == "m3":
            fresh = self.rng.normal(
                self.pub_base.mean,
                np.sqrt(self.pub_base.variance),
                (self.config.aux_samples, self.F),
            )
            news = np.vstack([fresh, orphan[None, :]]) if orphan is not None else fresh
            parts.append(
                np.log(self.alpha_p / len(news)) + data_loglik_rows(r, news, t)
            )
        else:
            news = None
            parts.append(
                np.array(
                    [np.log(self.alpha_p) + marginal_loglik_new_publication(r, t, self.pub_base)]
                )
            )
        return cand, np.concatenate(parts), news

    def sample_c(self, n):
        """Reassign test item n to an existing cluster or a fresh one."""
        if not self.is_test[n]:
            raise DomainError(f"item {n} is a training item; its cluster is pinned")
        orphan = self._detach_c(n)
        cand, logw, news = self._c_candidates(n, orphan)
        sel = _pick(logw, self.rng)
        if sel < len(cand):
            cid = cand[sel]
            self.c_members[cid].add(int(n))
        else:
            cid = self.next_c
            self.next_c += 1
            if news is not None:
                pub = news[sel - len(cand)]
            else:
                r = self.X[n]
                t = self.types[int(self.d[n])]
                pub = posterior_sample_publication(r[None, :], t[None, :], self.pub_base, self.rng)
            self.pubs[cid] = pub
            self.c_members[cid] = {int(n)}
        self.c[n] = cid

    def _detach_d(self, n):
        tid = int(self.d[n])
        members = self.d_members[tid]
        members.discard(int(n))
        if not members:
            del self.d_members[tid]
            return self.types.pop(tid)
        return None

    def _d_candidates(self, n, orphan):
        r = self.X[n]
        p = self.pubs[int(self.c[n])]
        d2 = (r - p) ** 2
        tids = list(self.types.keys())
        mat = np.array([self.types[t] for t in tids])
        counts = np.array([float(len(self.d_members[t])) for t in tids])
        existing = (
            np.log(counts)
            + 0.5 * np.log(mat).sum(axis=1)
            - 0.5 * mat @ d2
            - 0.5 * self.F * LOG_2PI
        )
        if self.variant == "m3":
            base = self.type_base
            fresh = self.rng.gamma(base.shape, base.scale, (self.config.aux_samples, self.F))
            news = np.vstack([fresh, orphan[None, :]]) if orphan is not None else fresh
            lw_new = (
                np.log(self.alpha_t / len(news))
                + 0.5 * np.log(news).sum(axis=1)
                - 0.5 * news @ d2
                - 0.5 * self.F * LOG_2PI
            )
            if self.conditional:
                # Candidates come from the plain base, but a new type's
                # prior is the distance-tilted gamma; reweight by the
                # normalized density ratio.
                lam = self.config.conditional_rate
                s_pair = pairwise_sq_diff_sum(list(self.pubs.values()))
                shifted = base.rate + lam * s_pair
                lw_new = (
                    lw_new
                    + float((base.shape * np.log(shifted / base.rate)).sum())
                    - lam * news @ s_pair
                )
            return tids, np.concatenate([existing, lw_new]), news
        news = None
        marg = self._marg_const - float(
            (self._marg_shape_half * np.log(self._marg_rate + 0.5 * d2)).sum()
        )
        lw_new = np.log(self.alpha_t) + marg
        return tids, np.concatenate([existing, [lw_new]]), news

    def sample_d(self, n):
        """Reassign item n's reference type (training items included)."""
        orphan = self._detach_d(n)
        tids, logw, news = self._d_candidates(n, orphan)
        sel = _pick(logw, self.rng)
        if sel < len(tids):
            tid = tids[sel]
            self.d_members[tid].add(int(n))
        else:
            tid = self.next_t
            self.next_t += 1
            if news is not None:
                tvec = news[sel - len(tids)]
            else:
                r = self.X[n]
                p = self.pubs[int(self.c[n])]
                tvec = posterior_sample_type(r[None, :], p[None, :], self.type_base, self.rng)
            self.types[tid] = tvec
            self.d_members[tid] = {int(n)}
        self.d[n] = tid

    # ------------------------------------------------------------------
    # sweeps and scoring

    def _resample_alphas(self):
        cfg = self.config
        if self.train_pair is not None:
            n_tr, k_tr = self.train_pair
            self.alpha_p = sample_precision_single(
                self.alpha_p, n_tr, k_tr, cfg.alpha_prior_p, self.rng
            )
        if not self.frozen_types:
            self.alpha_t = sample_precision_single(
                self.alpha_t, self.N, len(self.types), cfg.alpha_prior_t, self.rng
            )

    def sweep(self):
        """One full iteration over parameters, indicators, and precisions."""
        if self.variant == "m2" and not self.frozen_types:
            self._set_type_base(adapt_type_base(self.X, self.c, self.pubs))
        self._resample_publications()
        if not self.frozen_types:
            self._resample_types()
        for n in range(self.N):
            if self.is_test[n]:
                self.sample_c(n)
            if not self.frozen_types:
                self.sample_d(n)
        if self.config.resample_alphas:
            self._resample_alphas()
        self.iteration += 1

    def _eppf(self, alpha, sizes):
        lp = len(sizes) * np.log(alpha) + gammaln(alpha) - gammaln(alpha + self.N)
        return float(lp + sum(gammaln(s) for s in sizes))

    def joint_log_score(self):
        """Unnormalized log posterior density at the current state."""
        lp = self._eppf(self.alpha_p, [len(m) for m in self.c_members.values()])
        lp += self._eppf(self.alpha_t, [len(m) for m in self.d_members.values()])
        for pub in self.pubs.values():
            lp += publication_base_logpdf(pub, self.pub_base)
        if self.conditional:
            s_pair = pairwise_sq_diff_sum(list(self.pubs.values()))
            for tvec in self.types.values():
                lp += conditional_type_logdensity(
                    tvec, self.type_base, s_pair, rate=self.config.conditional_rate
                )
        else:
            for tvec in self.types.values():
                lp += type_base_logpdf(tvec, self.type_base)
        p_items = np.array([self.pubs[c] for c in self.c])
        t_items = np.array([self.types[t] for t in self.d])
        lp += float(
            0.5 * (np.log(t_items) - LOG_2PI - t_items * (self.X - p_items) ** 2).sum()
        )
        return lp

    def test_partition(self) -> Partition:
        return Partition({self.ids[i]: int(self.c[i]) for i in self.test_indices})

    def check(self):
        """Structural invariant audit (used by tests; cheap, not exhaustive)."""
        assert set(self.c_members) == set(self.pubs)
        assert set(self.d_members) == set(self.types)
        assert all(members for members in self.c_members.values())
        assert all(members for members in self.d_members.values())
        assert sum(len(m) for m in self.c_members.values()) == self.N
        assert sum(len(m) for m in self.d_members.values()) == self.N
        for cid, members in self.c_members.items():
            assert all(self.c[i] == cid for i in members)
        for tid, members in self.d_members.items():
            assert all(self.d[i] == tid for i in members)
        assert self.alpha_p > 0 and self.alpha_t > 0
        assert all(np.isfinite(v).all() for v in self.pubs.values())
        assert all(np.isfinite(v).all() and (v > 0).all() for v in self.types.values())


def init_state(dataset: Dataset, config: SamplerConfig, rng) -> ChainState:
    return ChainState(dataset, config, rng)


def chain_rng(config: SamplerConfig, chain_index: int):
    """Per-chain generator: seed XOR chain index, the documented convention."""
    return np.random.default_rng(config.seed ^ chain_index)


def run_chain(dataset: Dataset, config: SamplerConfig, chain_index: int):
    """Run one chain; returns a record per post-burn-in iteration."""
    state = init_state(dataset, config, chain_rng(config, chain_index))
    burn = config.resolved_burn_in()
    records = []
    for it in range(1, config.iterations + 1):
        state.sweep()
        if it > burn:
            score = state.joint_log_score()
            if not np.isfinite(score):
                raise RuntimeError(f"non-finite joint score at iteration {it}")
            records.append(
                SampleRecord(
                    iteration=it,
                    test_partition=state.test_partition(),
                    joint_log_score=score,
                    n_publications=len(state.pubs),
                    n_types=len(state.types),
                )
            )
    return records


def default_workers():
    env = os.environ.get("DPSC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"DPSC_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_chains(dataset: Dataset, config: SamplerConfig, max_workers=None):
    """All chains, optionally in parallel; results identical either way."""
    if max_workers is None:
        max_workers = default_workers()
    workers = max(1, min(max_workers, config.n_chains))
    if workers == 1:
        return [run_chain(dataset, config, i) for i in range(config.n_chains)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(run_chain, dataset, config, i) for i in range(config.n_chains)
        ]
        return [f.result() for f in futures]


def extract_prediction(per_chain_records) -> Partition:
    """The test partition of the highest-scoring record; ties go to the
    earliest (chain, iteration)."""
    best = None
    for records in per_chain_records:
        for rec in records:
            if best is None or rec.joint_log_score > best.joint_log_score:
                best = rec
    if best is None:
        raise DomainError("no sample records to extract a prediction from")
    return best.test_partition
