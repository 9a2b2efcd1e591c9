"""Pairwise scan of a synthetic two-region recording.

Unit A fires at random; unit B repeats A's spikes one millisecond later with
1% of bins flipped. The scan should flag A -> B and leave B -> A alone. A
10 ms target shift destroys the one-bin coupling, so the persistence re-run
should not reject.
"""

import tempfile
from pathlib import Path

from ccdi import AlphabetSpec, TestConfig
from ccdi.spikes import load_session, planted_session, scan_pairs, write_session

with tempfile.TemporaryDirectory() as tmp:
    write_session(Path(tmp), planted_session(length=100_000, seed=91))
    print("files:", sorted(p.name for p in Path(tmp).iterdir()))
    session = load_session(tmp)

report = scan_pairs(session, TestConfig(2, AlphabetSpec(2, 2), mode="uc"), shift_bins=10)
print(report.table())
