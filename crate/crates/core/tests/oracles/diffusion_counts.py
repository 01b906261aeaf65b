"""Exhaustive experiment A / B counts for one SP8 round, key 0x3A.

Straight-line enumeration, independent of the Rust code. Prints the counts
frozen in the unit tests and the per-(i, j) relation summary used by the
acceptance suite.
"""

SBOX = [0xC, 5, 6, 0xB, 9, 0, 0xA, 0xD, 3, 0xE, 0xF, 8, 4, 7, 1, 2]
L, Y, KEY = 8, 2, 0x3A


def sp8(v, k):
    bits = [(v >> (L - 1 - i)) & 1 for i in range(L)]
    sub = []
    for n in range(L // 4):
        nib = sum(b << (3 - t) for t, b in enumerate(bits[4 * n:4 * n + 4]))
        s = SBOX[nib]
        sub += [(s >> (3 - t)) & 1 for t in range(4)]
    out = [0] * L
    for i in range(L):
        out[(3 * i) % L] = sub[i]
    return sum(b << (L - 1 - i) for i, b in enumerate(out)) ^ k


def bit(v, i, w):
    return (v >> (w - 1 - i)) & 1


def counts_a(i, j):
    c = [0, 0, 0, 0]
    for v in range(1 << L):
        if bit(v, i, L):
            continue
        b0 = bit(sp8(v, KEY), j, L)
        b1 = bit(sp8(v | (1 << (L - 1 - i)), KEY), j, L)
        c[2 * b0 + b1] += 1
    return c


def g(v, k):
    p, t = v >> Y, v & ((1 << Y) - 1)
    o = [bit(sp8(p, KEY), q, L) for q in range(L)]
    win = [o[(k + q) % L] for q in range(Y)]
    for q in range(Y):
        o[(k + q) % L] ^= bit(t, q, Y)
    o += win
    return o


def counts_b(i, j, k):
    w = L + Y
    c = [0, 0, 0, 0]
    for v in range(1 << w):
        if bit(v, i, w):
            continue
        b0 = g(v, k)[j]
        b1 = g(v | (1 << (w - 1 - i)), k)[j]
        c[2 * b0 + b1] += 1
    return c


print("A(0,0)", counts_a(0, 0))
print("A(0,1)", counts_a(0, 1))
print("B(0,0,k=0)", counts_b(0, 0, 0))
bad = 0
for i in range(L):
    for j in range(Y):
        a, b = counts_a(i, j), counts_b(i, j, 0)
        lit = [(a[0] + a[1]) * 2 ** (Y - 1), (a[1] + a[0]) * 2 ** (Y - 1)]
        if [b[0], b[1]] != lit:
            bad += 1
print("window cells violating the half-sum relation:", bad, "of", L * Y)
