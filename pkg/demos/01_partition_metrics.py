"""Tour of the partition metrics.

Builds a small gold clustering, scores a few hypotheses against it, and
prints the full metric table, including the degenerate all-in-one and
all-singletons baselines whose conventions anchor the scale.

Run:  python3 demos/01_partition_metrics.py
"""

from dpsc import Partition, coarse, fine, full_report

gold = Partition.from_clusters(
    [["ann", "anne", "a. smith"], ["bob", "robert"], ["carol"]]
)

hypotheses = {
    "perfect": gold,
    "one merge off": Partition.from_clusters(
        [["ann", "anne", "a. smith", "carol"], ["bob", "robert"]]
    ),
    "over-split": Partition.from_clusters(
        [["ann", "anne"], ["a. smith"], ["bob", "robert"], ["carol"]]
    ),
    "coarse": coarse(gold.items()),
    "fine": fine(gold.items()),
}

header = f"{'hypothesis':<14} {'RI':>6} {'P':>6} {'R':>6} {'F':>6} {'CED':>4} {'NES':>6} {'VI':>6} {'NVI':>6}"
print(header)
print("-" * len(header))
for name, hyp in hypotheses.items():
    rep = full_report(gold, hyp)
    print(
        f"{name:<14} {rep.rand_index:6.3f} {rep.precision:6.3f} {rep.recall:6.3f} "
        f"{rep.f_score:6.3f} {rep.ced_gh:4d} {rep.nes:6.3f} {rep.vi:6.3f} {rep.nvi:6.3f}"
    )

print()
print("Conventions worth noticing:")
print(" - coarse always has recall 1; fine always has precision 1 and F 0")
print(" - CED is asymmetric: with no split operation, undoing a bad merge")
print("   costs one move per misplaced element, while undoing a bad split")
print("   is a single merge")
whole = Partition.from_clusters([["w", "x", "y", "z"]])
halves = Partition.from_clusters([["w", "x"], ["y", "z"]])
rep = full_report(whole, halves)
print(f" - e.g. CED({{wxyz}} <- {{wx|yz}}) = {rep.ced_gh}, "
      f"CED({{wx|yz}} <- {{wxyz}}) = {rep.ced_hg}")
