"""Partition-comparison metrics.

Everything here scores a hypothesis clustering H against a gold clustering
G over the same item set: pair-counting metrics (Rand index, precision,
recall, F), the asymmetric cluster edit distance and its symmetric
normalized edit score, and the entropy-based variation of information.
All scores are invariant to cluster relabeling and item order.
"""

from __future__ import annotations

import math
import sys
from collections import Counter, defaultdict
from dataclasses import dataclass

from .errors import DomainError
from .partition import Partition


@dataclass(frozen=True)
class PairCounts:
    """Unordered item pairs classified by same/different cluster membership.

    n11: same cluster in both; n00: different in both; n10: same in gold
    only; n01: same in hypothesis only.  The four counts always sum to
    N(N-1)/2.
    """

    n11: int
    n00: int
    n10: int
    n01: int

    @property
    def total(self):
        return self.n11 + self.n00 + self.n10 + self.n01


@dataclass(frozen=True)
class MetricReport:
    rand_index: float
    precision: float
    recall: float
    f_score: float
    ced_gh: int
    ced_hg: int
    nes: float
    vi: float
    nvi: float


def _check_pair(gold, hyp):
    gi, hi = gold.items(), hyp.items()
    if gi != hi:
        missing = sorted(map(str, gi - hi))[:5]
        extra = sorted(map(str, hi - gi))[:5]
        raise DomainError(
            f"partitions cover different items (missing from hypothesis: {missing}, "
            f"extra in hypothesis: {extra})"
        )
    if gold.n_items < 2:
        raise DomainError("need at least 2 items to compare partitions")


def _contingency(gold, hyp):
    """Joint cluster-membership counts: (gold cid, hyp cid) -> n items."""
    joint = Counter()
    for item, gcid in gold.assignment.items():
        joint[gcid, hyp.assignment[item]] += 1
    return joint


def pair_counts(gold: Partition, hyp: Partition) -> PairCounts:
    """Classify every unordered item pair by agreement between G and H."""
    _check_pair(gold, hyp)
    n = gold.n_items
    joint = _contingency(gold, hyp)
    n11 = sum(c * (c - 1) // 2 for c in joint.values())
    same_g = sum(len(m) * (len(m) - 1) // 2 for m in gold.clusters().values())
    same_h = sum(len(m) * (len(m) - 1) // 2 for m in hyp.clusters().values())
    n10 = same_g - n11
    n01 = same_h - n11
    n00 = n * (n - 1) // 2 - n11 - n10 - n01
    return PairCounts(n11=n11, n00=n00, n10=n10, n01=n01)


def rand_index(gold: Partition, hyp: Partition) -> float:
    pc = pair_counts(gold, hyp)
    return 2.0 * (pc.n11 + pc.n00) / (gold.n_items * (gold.n_items - 1))


def precision_recall_f(gold: Partition, hyp: Partition):
    """Pairwise precision/recall/F.

    Degenerate conventions: an all-singleton side has no positive decisions,
    so the corresponding ratio is defined as 1; F is 0 when P + R = 0.
    """
    pc = pair_counts(gold, hyp)
    p = pc.n11 / (pc.n11 + pc.n01) if pc.n11 + pc.n01 > 0 else 1.0
    r = pc.n11 / (pc.n11 + pc.n10) if pc.n11 + pc.n10 > 0 else 1.0
    f = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def _max_bipartite_matching(cands, n_right):
    """Kuhn's augmenting-path matching size; cands[u] lists right nodes."""
    match_right = [-1] * n_right
    limit = sys.getrecursionlimit()
    need = 2 * (len(cands) + n_right) + 100
    if need > limit:
        sys.setrecursionlimit(need)

    def try_assign(u, seen):
        for v in cands[u]:
            if not seen[v]:
                seen[v] = True
                if match_right[v] < 0 or try_assign(match_right[v], seen):
                    match_right[v] = u
                    return True
        return False

    size = 0
    for u in range(len(cands)):
        if try_assign(u, [False] * n_right):
            size += 1
    return size


def cluster_edit_distance(gold: Partition, hyp: Partition) -> int:
    """Minimum move/merge operations turning H into G (splits disallowed).

    Each hypothesis cluster is mapped to the gold class it overlaps most;
    items outside the mapped class cost one move each, and k clusters
    mapped to the same class cost k-1 merges.  Among tied plurality
    classes the mapping is chosen to cover as many distinct gold classes
    as possible (a bipartite matching), which minimizes the merge count;
    moving a cluster off its plurality class can never do better, since a
    move costs at least the one merge it could save.
    """
    _check_pair(gold, hyp)
    gold_cids = list(gold.clusters())
    gidx = {cid: i for i, cid in enumerate(gold_cids)}
    item_gold = {item: gidx[cid] for item, cid in gold.assignment.items()}

    moves = 0
    argmax_sets = []
    for members in hyp.clusters().values():
        overlap = Counter(item_gold[item] for item in members)
        best = max(overlap.values())
        moves += len(members) - best
        argmax_sets.append([g for g, c in overlap.items() if c == best])
    merges = len(argmax_sets) - _max_bipartite_matching(argmax_sets, len(gold_cids))
    return moves + merges


def normalized_edit_score(gold: Partition, hyp: Partition) -> float:
    """1 - [CED(G,H) + CED(H,G)] / 2N; symmetric, in [0, 1]."""
    _check_pair(gold, hyp)
    ced = cluster_edit_distance(gold, hyp) + cluster_edit_distance(hyp, gold)
    return 1.0 - ced / (2.0 * gold.n_items)


def variation_of_information(gold: Partition, hyp: Partition):
    """(VI, NVI): H(G) + H(H) - 2 I(G,H) in nats, and 1 - VI/log N."""
    _check_pair(gold, hyp)
    n = gold.n_items
    joint = _contingency(gold, hyp)
    sizes_g = defaultdict(int)
    sizes_h = defaultdict(int)
    for (g, h), c in joint.items():
        sizes_g[g] += c
        sizes_h[h] += c
    h_g = -sum(c / n * math.log(c / n) for c in sizes_g.values())
    h_h = -sum(c / n * math.log(c / n) for c in sizes_h.values())
    mi = sum(
        c / n * math.log(c * n / (sizes_g[g] * sizes_h[h]))
        for (g, h), c in joint.items()
    )
    vi = max(0.0, h_g + h_h - 2.0 * mi)
    nvi = 1.0 - vi / math.log(n)
    return vi, nvi


def full_report(gold: Partition, hyp: Partition) -> MetricReport:
    """All metrics for one (gold, hypothesis) pair."""
    pc = pair_counts(gold, hyp)
    n = gold.n_items
    ri = 2.0 * (pc.n11 + pc.n00) / (n * (n - 1))
    p = pc.n11 / (pc.n11 + pc.n01) if pc.n11 + pc.n01 > 0 else 1.0
    r = pc.n11 / (pc.n11 + pc.n10) if pc.n11 + pc.n10 > 0 else 1.0
    f = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    ced_gh = cluster_edit_distance(gold, hyp)
    ced_hg = cluster_edit_distance(hyp, gold)
    nes = 1.0 - (ced_gh + ced_hg) / (2.0 * n)
    vi, nvi = variation_of_information(gold, hyp)
    return MetricReport(
        rand_index=ri,
        precision=p,
        recall=r,
        f_score=f,
        ced_gh=ced_gh,
        ced_hg=ced_hg,
        nes=nes,
        vi=vi,
        nvi=nvi,
    )
