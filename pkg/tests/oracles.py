"""Slow, direct reference implementations used only by the tests."""

import math
from fractions import Fraction

import numpy as np


def mirror_index(i, n):
    # scipy "mirror": d c b | a b c d | c b a
    while i < 0 or i >= n:
        i = -i if i < 0 else 2 * (n - 1) - i
    return i


def dog_kernel_2d(sigma1, sigma2, radius):
    ax = range(-radius, radius + 1)
    g1 = np.array([[math.exp(-(u * u + v * v) / (2 * sigma1**2)) for u in ax] for v in ax])
    g2 = np.array([[math.exp(-(u * u + v * v) / (2 * sigma2**2)) for u in ax] for v in ax])
    return g1 / g1.sum() - g2 / g2.sum()


def dog_convolve(img, sigma1, sigma2):
    img = np.asarray(img, dtype=np.float64)
    radius = math.ceil(3.5 * sigma2)
    d = dog_kernel_2d(sigma1, sigma2, radius)
    h, w = img.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for v in range(-radius, radius + 1):
                for u in range(-radius, radius + 1):
                    acc += d[v + radius, u + radius] * img[mirror_index(y - v, h), mirror_index(x - u, w)]
            out[y, x] = acc
    return out


def gabor_kernel_literal(sigma, k, phi, radius):
    """Kernel with the continuum DC term exp(-sigma^2/2)."""
    out = np.zeros((2 * radius + 1, 2 * radius + 1), dtype=complex)
    for y in range(-radius, radius + 1):
        for x in range(-radius, radius + 1):
            env = (k * k / sigma**2) * math.exp(-k * k * (x * x + y * y) / (2 * sigma**2))
            wave = complex(math.cos(k * (math.cos(phi) * x + math.sin(phi) * y)),
                           math.sin(k * (math.cos(phi) * x + math.sin(phi) * y)))
            out[y + radius, x + radius] = env * (wave - math.exp(-sigma**2 / 2))
    return out


def gabor_response(raster, p, kernel):
    raster = np.asarray(raster, dtype=np.float64)
    h, w = raster.shape
    r = kernel.shape[0] // 2
    cx, cy = int(np.rint(p[0])), int(np.rint(p[1]))
    acc = 0j
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            x, y = cx + dx, cy + dy
            if 0 <= x < w and 0 <= y < h:
                acc += kernel[dy + r, dx + r] * raster[y, x]
    return abs(acc)


def rates(genuine, impostor, t):
    """Exact (FAR, FRR) as fractions."""
    far = Fraction(sum(1 for s in impostor if s >= t), len(impostor))
    frr = Fraction(sum(1 for s in genuine if s < t), len(genuine))
    return far, frr


def eer_sweep(genuine, impostor):
    best = None
    for t in sorted(set(genuine) | set(impostor)):
        far, frr = rates(genuine, impostor, t)
        key = (abs(far - frr), (far + frr) / 2)
        if best is None or key < best:
            best = key
    return float(best[1])


def frr_at_far_sweep(genuine, impostor, target):
    if len(impostor) < 1 / target:
        t = float(np.nextafter(max(impostor), math.inf))
        return float(rates(genuine, impostor, t)[1])
    top = max(max(genuine), max(impostor))
    for t in sorted(set(genuine) | set(impostor)) + [float(np.nextafter(top, math.inf))]:
        far, frr = rates(genuine, impostor, t)
        if far <= Fraction(repr(target)):
            return float(frr)
    raise AssertionError("unreachable")


def reference_count(n1, n2, pro_num, pro_den=1):
    """max(1, floor(n1*n2*pro/100)) with pro = pro_num/pro_den, in integers."""
    return max(1, (n1 * n2 * pro_num) // (100 * pro_den))


def sim2_exhaustive(pairs, xy1, th1, xy2, th2, dist_abs=5.0, dist_rel=0.1, ang_tol=math.pi / 9):
    if len(pairs) < 2:
        return 1.0
    good = total = 0
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            i1, j1 = pairs[a][0], pairs[a][1]
            i2, j2 = pairs[b][0], pairs[b][1]
            d1 = math.dist(xy1[i1], xy1[i2])
            d2 = math.dist(xy2[j1], xy2[j2])
            r1 = th1[i1] - th1[i2]
            r2 = th2[j1] - th2[j2]
            dr = abs((r1 - r2 + math.pi) % (2 * math.pi) - math.pi)
            total += 1
            good += abs(d1 - d2) <= max(dist_abs, dist_rel * max(d1, d2)) and dr <= ang_tol
    return good / total


def fisher_direction(x, labels):
    """Closed-form two-class Fisher direction S_w^-1 (m1 - m2), unit length."""
    a, b = np.unique(labels)
    xa, xb = x[labels == a], x[labels == b]
    sw = (xa - xa.mean(0)).T @ (xa - xa.mean(0)) + (xb - xb.mean(0)).T @ (xb - xb.mean(0))
    v = np.linalg.solve(sw, xa.mean(0) - xb.mean(0))
    return v / np.linalg.norm(v)
