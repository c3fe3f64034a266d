# SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the preprocessing fixture (genome, ChIP-Seq table, embeddings)."""
import random
import struct
from pathlib import Path

HERE = Path(__file__).resolve().parent
CHROMS = ["chr1", "chr2", "chr20", "chr21", "chr22", "chrX"]
LENGTH = 2000
N_RUN = ("chr2", 1000, 1010)

# (tf, cell type, score, chrom, length) in file order.
ROWS = (
    # CTCF / GM12878 at the group maximum.
    [("CTCF", "GM12878", 1000, c, 200) for c in ["chr1"] * 4 + ["chr2", "chr2", "chr20", "chr20", "chr21", "chr22", "chrX"]]
    + [("CTCF", "GM12878", 1000, "chr1", 600)]
    # CTCF / GM12878 below the maximum.
    + [("CTCF", "GM12878", s, "chr1", 200) for s in (400, 500, 600, 700, 800, 850, 900, 999)]
    # TCF7 / GM12878 at the group maximum.
    + [("TCF7", "GM12878", 405, c, 200) for c in ["chr1", "chr1", "chr20", "chr21", "chr22", "chrX", "chrX"]]
    + [("TCF7", "GM12878", 405, "chr1", 500)]
    + [("TCF7", "GM12878", s, "chr20", 200) for s in (100, 200, 300, 404)]
    + [("TCF7", "K562", 700, "chr1", 200)] * 4
    + [("TCF7", "K562", s, "chr1", 200) for s in (10, 20)]
    + [("REST", "GM12878", 800, c, 200) for c in ("chr1", "chr20", "chrX")]
    + [("MYC", "GM12878", 650, c, 200) for c in ("chr1", "chr21", "chr22")]
    + [("CTCF", "HepG2", 1000, "chr1", 200)] * 2
    + [("REST", "GM12878", 100, "chr1", 200)]
    + [("MYC", "GM12878", 5, "chr1", 200)]
    + [("CTCF", "HepG2", s, "chr22", 200) for s in (1, 2)]
)
EMBEDDING_ROWS = {"CTCF": 300, "TCF7": 800, "REST": 1200, "MYC": 400}


def main():
    rng = random.Random(20260101)
    genome = {}
    for c in CHROMS:
        bases = [rng.choice("ACGT") for _ in range(LENGTH)]
        if c == N_RUN[0]:
            for i in range(N_RUN[1], N_RUN[2]):
                bases[i] = "N"
        genome[c] = "".join(bases)
    with open(HERE / "genome.fa", "w") as f:
        for c in CHROMS:
            f.write(f">{c} fixture\n")
            s = genome[c]
            for i in range(0, len(s), 60):
                f.write(s[i : i + 60] + "\n")

    assert len(ROWS) == 50, len(ROWS)
    offsets = {c: 0 for c in CHROMS}
    with open(HERE / "chipseq_fixture.tsv", "w") as f:
        f.write("chrom\tstart\tend\ttf\tcell_type\tscore\n")
        for i, (tf, cell, score, chrom, length) in enumerate(ROWS):
            if chrom == "chr2" and i == 5:
                start = N_RUN[1] - 50
            else:
                start = 20 + offsets[chrom] % (LENGTH - 700)
                if chrom == "chr2":
                    start = 20
                offsets[chrom] += 37
            f.write(f"{chrom}\t{start}\t{start + length}\t{tf}\t{cell}\t{score}\n")

    for tf, rows in EMBEDDING_ROWS.items():
        cols = 4
        ident = f"{tf}_fixture".encode()
        payload = b"".join(struct.pack("<f", ((r * cols + c) % 17) / 17.0) for r in range(rows) for c in range(cols))
        header = b"SQFEMB01" + struct.pack("<III", rows, cols, len(ident)) + ident
        (HERE / "embeddings" / f"{tf}.emb").write_bytes(header + payload)


if __name__ == "__main__":
    main()
