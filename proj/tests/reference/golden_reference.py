#!/usr/bin/env python3
"""Reference feature extractor used to freeze the golden feature corpus.

Written as plain per-pixel loops over nested lists with no image library, so
it shares no code path with the C++ extractor it checks. Running it rewrites
tests/data/golden/*.ppm and tests/data/golden/features.csv.

    python3 tests/reference/golden_reference.py tests/data/golden
"""

import math
import os
import sys

SIZE = 64

NAMES = (
    ["n_keypoints", "avg_brightness", "brightness_rms",
     "avg_perceived_brightness", "perceived_brightness_rms", "contrast"]
    + ["edge_length%d" % i for i in range(1, 8)]
    + ["edge_angle%d" % i for i in range(1, 8)]
    + ["area_by_perim", "aspect_ratio"]
    + ["hue%d" % i for i in range(1, 8)]
)

CIRCLE = [(0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
          (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3)]


# --------------------------------------------------------------------------
# Raster construction


class Lcg:
    def __init__(self, seed):
        self.state = seed & 0xFFFFFFFF

    def next(self):
        self.state = (1664525 * self.state + 1013904223) & 0xFFFFFFFF
        return self.state >> 24


def blank(w, h, c):
    return [[c for _ in range(w)] for _ in range(h)]


def make_rasters():
    out = []
    w = h = SIZE

    out.append(("g00_uniform_gray", blank(w, h, (128, 128, 128))))

    img = blank(w, h, (0, 0, 0))
    for y in range(h):
        for x in range(w):
            img[y][x] = (255, 0, 0) if x < w // 2 else (0, 0, 255)
    out.append(("g01_red_blue_halves", img))

    img = blank(w, h, (0, 0, 0))
    for y in range(h):
        for x in range(w):
            v = (x * 255) // (w - 1)
            img[y][x] = (v, v, v)
    out.append(("g02_horizontal_ramp", img))

    img = blank(w, h, (0, 0, 0))
    for y in range(h):
        for x in range(w):
            img[y][x] = (240, 240, 240) if ((x // 8) + (y // 8)) % 2 else (15, 15, 15)
    out.append(("g03_checkerboard", img))

    img = blank(w, h, (20, 60, 20))
    for y in range(h):
        for x in range(w):
            if (x - 30) ** 2 + (y - 34) ** 2 <= 15 ** 2:
                img[y][x] = (230, 200, 40)
    out.append(("g04_disc", img))

    rng = Lcg(12345)
    img = blank(w, h, (0, 0, 0))
    for y in range(h):
        for x in range(w):
            img[y][x] = (rng.next(), rng.next(), rng.next())
    out.append(("g05_noise", img))

    img = blank(w, h, (200, 200, 210))
    for y in range(10, 30):
        for x in range(6, 50):
            img[y][x] = (30, 30, 160)
    for y in range(36, 58):
        for x in range(40, 52):
            img[y][x] = (180, 20, 20)
    for (x, y) in ((12, 15), (20, 22), (30, 14), (42, 24), (10, 48), (22, 54)):
        img[y][x] = (255, 255, 255)
    out.append(("g06_rectangles_dots", img))

    img = blank(w, h, (0, 0, 0))
    for y in range(h):
        for x in range(w):
            img[y][x] = (250, 250, 250) if ((x + y) // 6) % 2 else (10, 10, 10)
    out.append(("g07_diagonal_stripes", img))

    img = blank(w, h, (0, 0, 0))
    for y in range(h):
        for x in range(w):
            r2 = (x - 32) ** 2 + (y - 32) ** 2
            ring = int(math.isqrt(r2)) // 5
            img[y][x] = (40 + 20 * (ring % 5), 220 - 30 * (ring % 4), 90 + 40 * (ring % 3))
    out.append(("g08_rings", img))

    img = blank(w, h, (0, 0, 0))
    for y in range(h):
        for x in range(w):
            img[y][x] = ((x * 4) % 256, (y * 4) % 256, ((x + y) * 2) % 256)
    out.append(("g09_color_field", img))

    return out


def write_ppm(path, img):
    h = len(img)
    w = len(img[0])
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        buf = bytearray()
        for row in img:
            for (r, g, b) in row:
                buf += bytes((r, g, b))
        f.write(bytes(buf))


# --------------------------------------------------------------------------
# Per-formula reference computations


def gray_num(p):
    r, g, b = p
    return 299 * r + 587 * g + 114 * b


def brightness_stats(img):
    n = len(img) * len(img[0])
    s = 0
    s2 = 0
    for row in img:
        for p in row:
            q = gray_num(p)
            s += q
            s2 += q * q
    avg = s / (1000 * n)
    rms = math.sqrt(float(s2) / n) / 1000.0
    contrast = math.sqrt(float(n * s2 - s * s)) / (1000.0 * n)
    return avg, rms, contrast


def perceived_stats(img):
    n = len(img) * len(img[0])
    total = 0.0
    s2 = 0
    for row in img:
        for (r, g, b) in row:
            num = 241 * r * r + 691 * g * g + 68 * b * b
            total += math.sqrt(num / 1000.0)
            s2 += num
    return total / n, math.sqrt(s2 / (1000 * n))


def keypoints(img):
    h = len(img)
    w = len(img[0])
    t = 20 * 1000
    count = 0
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            c = gray_num(img[y][x])
            states = []
            for dx, dy in CIRCLE:
                v = gray_num(img[y + dy][x + dx])
                if v > c + t:
                    states.append(1)
                elif v < c - t:
                    states.append(-1)
                else:
                    states.append(0)
            found = False
            for want in (1, -1):
                run = 0
                for i in range(32):
                    if states[i % 16] == want:
                        run += 1
                        if run >= 12:
                            found = True
                            break
                    else:
                        run = 0
                if found:
                    break
            if found:
                count += 1
    return count


def sobel(img):
    h = len(img)
    w = len(img[0])
    q = [[gray_num(img[y][x]) for x in range(w)] for y in range(h)]
    gx = [[0] * w for _ in range(h)]
    gy = [[0] * w for _ in range(h)]
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            gx[y][x] = (q[y - 1][x + 1] + 2 * q[y][x + 1] + q[y + 1][x + 1]) - \
                       (q[y - 1][x - 1] + 2 * q[y][x - 1] + q[y + 1][x - 1])
            gy[y][x] = (q[y + 1][x - 1] + 2 * q[y + 1][x] + q[y + 1][x + 1]) - \
                       (q[y - 1][x - 1] + 2 * q[y - 1][x] + q[y - 1][x + 1])
    return gx, gy


def edge_mask(gx, gy):
    h = len(gx)
    w = len(gx[0])
    peak = 0
    for y in range(h):
        for x in range(w):
            peak = max(peak, gx[y][x] ** 2 + gy[y][x] ** 2)
    mask = [[False] * w for _ in range(h)]
    if peak == 0:
        return mask
    for y in range(h):
        for x in range(w):
            m = gx[y][x] ** 2 + gy[y][x] ** 2
            if m > 0 and 16 * m >= peak:
                mask[y][x] = True
    return mask


def components(mask):
    """8-connected components via iterative DFS, in raster order of seeds."""
    h = len(mask)
    w = len(mask[0])
    seen = [[False] * w for _ in range(h)]
    comps = []
    for y0 in range(h):
        for x0 in range(w):
            if not mask[y0][x0] or seen[y0][x0]:
                continue
            stack = [(x0, y0)]
            seen[y0][x0] = True
            pix = []
            while stack:
                x, y = stack.pop()
                pix.append((x, y))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        nx, ny = x + dx, y + dy
                        if 0 <= nx < w and 0 <= ny < h and mask[ny][nx] and not seen[ny][nx]:
                            seen[ny][nx] = True
                            stack.append((nx, ny))
            comps.append(pix)
    return comps


def length_bin(size):
    for i, upper in enumerate((2, 4, 8, 16, 32, 64)):
        if size <= upper:
            return i
    return 6


def edge_features(img):
    h = len(img)
    w = len(img[0])
    gx, gy = sobel(img)
    mask = edge_mask(gx, gy)

    angle = [0] * 7
    edges = 0
    for y in range(h):
        for x in range(w):
            if mask[y][x]:
                a = math.atan2(gy[y][x], gx[y][x])
                if a < 0:
                    a += math.pi
                if a >= math.pi:
                    a -= math.pi
                k = min(6, int(a * 7 / math.pi))
                angle[k] += 1
                edges += 1
    angle_hist = [c / edges if edges else 0.0 for c in angle]

    comps = components(mask)
    length = [0] * 7
    for c in comps:
        length[length_bin(len(c))] += 1
    length_hist = [c / len(comps) if comps else 0.0 for c in length]

    if not comps:
        return length_hist, angle_hist, 0.0, w / h

    best = comps[0]
    for c in comps[1:]:
        if len(c) > len(best):
            best = c
    members = set(best)
    perim = 0
    for (x, y) in best:
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if (x + dx, y + dy) not in members:
                perim += 1
                break
    xs = [p[0] for p in best]
    ys = [p[1] for p in best]
    aspect = (max(xs) - min(xs) + 1) / (max(ys) - min(ys) + 1)
    return length_hist, angle_hist, len(best) / perim, aspect


def hue_hist(img):
    bins = [0] * 7
    total = 0
    for row in img:
        for (r, g, b) in row:
            mx = max(r, g, b)
            mn = min(r, g, b)
            d = mx - mn
            if mx == 0 or 10 * d < mx:
                continue
            if r >= g and r >= b:
                t = g - b
                if t < 0:
                    t += 6 * d
            elif g >= b:
                t = 2 * d + (b - r)
            else:
                t = 4 * d + (r - g)
            bins[(7 * t) // (6 * d)] += 1
            total += 1
    return [c / total if total else 0.0 for c in bins]


def features(img):
    avg, rms, contrast = brightness_stats(img)
    pavg, prms = perceived_stats(img)
    length_hist, angle_hist, abp, aspect = edge_features(img)
    return ([float(keypoints(img)), avg, rms, pavg, prms, contrast]
            + length_hist + angle_hist + [abp, aspect] + hue_hist(img))


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else "."
    os.makedirs(outdir, exist_ok=True)
    rows = []
    for name, img in make_rasters():
        write_ppm(os.path.join(outdir, name + ".ppm"), img)
        rows.append((name, features(img)))
    with open(os.path.join(outdir, "features.csv"), "w") as f:
        f.write("image_id," + ",".join(NAMES) + "\n")
        for name, vals in rows:
            f.write(name + "," + ",".join(repr(v) for v in vals) + "\n")


if __name__ == "__main__":
    main()
