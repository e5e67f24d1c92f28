"""Exactly-balanced hash seeds for strict fairness thresholds.

When the fairness threshold admits only hash functions whose bucket counts
are exactly equal (rho at or near 1 with g dividing the domain size), blind
rejection sampling is not a practical selection strategy: for a 128-item
domain and g = 8 the acceptance probability per drawn seed is about 2.7e-7,
so a single selection would need millions of draws.  Instead, the seed space
is scanned once, ascending from zero, and the qualifying seeds are recorded;
selection then draws uniformly from the recorded sub-family.

The table below for (domain_size=128, g=8) holds the 256 smallest seeds whose
partition of [0, 128) is exactly 16 per bucket (scan range [0, 1e9)).  A test
re-verifies every entry.  Tables for other shapes can be produced with
:func:`scan_balanced_seeds` and installed with :func:`register_balanced_seeds`.
"""

from __future__ import annotations

import numpy as np

from .hashing import domain_mixes, mix64_array

_BALANCED_128_8 = (
    1269786, 5374140, 10779127, 17012809, 20277883, 24081959,
    37225056, 38891027, 41147294, 42000816, 44112579, 50420453,
    54507430, 58799262, 64223995, 65270100, 71151597, 74266460,
    75342582, 76585438, 81359431, 86005843, 88662415, 90149184,
    91848238, 92258145, 94514043, 108323960, 109104918, 109253037,
    109689043, 111229746, 114636023, 118923919, 121846345, 129352589,
    130568348, 130921335, 131466296, 133701398, 136415976, 140807208,
    141582870, 144738723, 148575447, 151355635, 154163921, 154784798,
    155573449, 156748177, 157618986, 171339852, 174893154, 185568027,
    191196739, 193323804, 198113936, 198287209, 203694774, 206719420,
    208727574, 215520413, 216015174, 226784106, 227559127, 232905207,
    234879730, 239024317, 242781417, 242907597, 243922407, 247029158,
    250225191, 263370267, 264956766, 266146299, 270279230, 272371087,
    274362489, 282702166, 286305281, 288540280, 294097362, 306627211,
    308127588, 322528247, 328308354, 332420857, 335769513, 341780693,
    346305222, 351814347, 367536292, 370320399, 373399836, 375416155,
    382286553, 382741505, 382970459, 384407608, 385974840, 389721059,
    389839077, 393798360, 396400153, 396551687, 397484728, 400341064,
    403788188, 421322747, 427095952, 427472883, 432832762, 433706659,
    442744693, 443311358, 446039436, 446519669, 449657029, 454196790,
    455302906, 458192852, 462092005, 463090758, 463786771, 477700575,
    482260530, 485666704, 488070294, 488466591, 491863989, 497956998,
    500107590, 504539858, 511306245, 514382815, 524700765, 527438402,
    527553216, 529451753, 530711052, 531228155, 543520689, 547936631,
    549564605, 553637192, 554414058, 555358478, 559434823, 559527813,
    564507986, 566727326, 568834080, 570385616, 571071623, 575335434,
    578912166, 579936643, 586948129, 594581512, 602002084, 602373195,
    605128199, 605160677, 605354915, 614021914, 617994992, 618585984,
    621620146, 624712326, 624891470, 631366625, 634355209, 636518716,
    637299339, 640439745, 642915949, 647467101, 653538855, 663413621,
    665253278, 668335436, 668776693, 679209530, 690578021, 690892693,
    691300479, 695259298, 697652519, 702113669, 704243912, 709805901,
    709892014, 710263272, 714407212, 716137892, 717718129, 718389388,
    720495783, 722678906, 723570208, 726923312, 732120473, 737083532,
    737830539, 740922522, 742242114, 745735192, 748216040, 750660061,
    753743397, 754335077, 759224446, 761202184, 762367563, 762612421,
    765327088, 783388301, 790417851, 790894815, 791246798, 795867424,
    799454417, 799929421, 806478500, 818279947, 825969838, 826893411,
    832837003, 832863832, 849779935, 850474140, 851844149, 851911660,
    857533140, 857577775, 861861509, 864483231, 867078717, 867433976,
    876570250, 901754165, 906694457, 909425277, 914121985, 918687022,
    919711536, 929534999, 932592400, 933977365, 934090533, 937020270,
    938191083, 942109724, 949073174, 952367633,
)

_TABLES: dict[tuple[int, int], tuple[int, ...]] = {
    (128, 8): _BALANCED_128_8,
}


def balanced_seed_table(domain_size: int, g: int) -> tuple[int, ...] | None:
    """Known exactly-balanced seeds for (domain_size, g), or None."""
    return _TABLES.get((domain_size, g))


def register_balanced_seeds(domain_size: int, g: int, seeds) -> None:
    """Install a table of exactly-balanced seeds after verifying every entry."""
    if domain_size % g != 0:
        raise ValueError("balanced tables require g to divide domain_size")
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("empty seed table")
    q = domain_size // g
    mixes = domain_mixes(domain_size)
    for s in seeds:
        buckets = (mix64_array(np.uint64(s) ^ mixes) % np.uint64(g)).astype(np.int64)
        counts = np.bincount(buckets, minlength=g)
        if not np.all(counts == q):
            raise ValueError(f"seed {s} is not exactly balanced for ({domain_size}, {g})")
    _TABLES[(domain_size, g)] = seeds


def unregister_balanced_seeds(domain_size: int, g: int) -> None:
    """Remove a runtime-registered table (frozen defaults can be removed too)."""
    _TABLES.pop((domain_size, g), None)


def scan_balanced_seeds(
    domain_size: int,
    g: int,
    count: int,
    start: int = 0,
    batch: int = 1 << 16,
    max_scan: int = 1 << 40,
) -> np.ndarray:
    """Scan seeds ascending from ``start``, returning the first ``count`` whose
    bucket counts over [0, domain_size) are exactly domain_size/g each.

    Expected scan length per find is the inverse multinomial probability of a
    perfectly even partition, which grows steeply with domain_size; use the
    frozen tables for large shapes.
    """
    if domain_size % g != 0:
        raise ValueError("exact balance requires g to divide domain_size")
    q = domain_size // g
    mixes = domain_mixes(domain_size)
    found: list[int] = []
    pos = start
    while len(found) < count:
        if pos - start >= max_scan:
            raise RuntimeError(f"scanned {pos - start} seeds, found only {len(found)}")
        cand = np.arange(pos, pos + batch, dtype=np.uint64)
        buckets = mix64_array(cand[:, None] ^ mixes[None, :]) % np.uint64(g)
        hits = np.all(
            np.stack([(buckets == b).sum(axis=1) == q for b in range(g)], axis=1), axis=1
        )
        found.extend(int(s) for s in cand[hits])
        pos += batch
    return np.array(found[:count], dtype=np.uint64)


def verify_balanced(domain_size: int, g: int, seed: int) -> bool:
    """True iff the seed partitions [0, domain_size) exactly evenly."""
    mixes = domain_mixes(domain_size)
    buckets = (mix64_array(np.uint64(seed) ^ mixes) % np.uint64(g)).astype(np.int64)
    counts = np.bincount(buckets, minlength=g)
    return bool(np.all(counts == domain_size // g))
