"""Reference MT19937-64 plus the bounded draw and Fisher-Yates used for
seeded sampling and blind-packet shuffles. Written from the published
algorithm; shares no code with the C++ implementation."""

MASK = (1 << 64) - 1


class MT64:
    N, M = 312, 156
    MATRIX_A = 0xB5026F5AA96619E9
    UPPER = MASK ^ ((1 << 31) - 1)
    LOWER = (1 << 31) - 1

    def __init__(self, seed):
        self.mt = [0] * self.N
        self.mt[0] = seed & MASK
        for i in range(1, self.N):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.idx = self.N

    def _twist(self):
        mt = self.mt
        for i in range(self.N):
            x = (mt[i] & self.UPPER) | (mt[(i + 1) % self.N] & self.LOWER)
            xa = x >> 1
            if x & 1:
                xa ^= self.MATRIX_A
            mt[i] = mt[(i + self.M) % self.N] ^ xa
        self.idx = 0

    def next(self):
        if self.idx >= self.N:
            self._twist()
        y = self.mt[self.idx]
        self.idx += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK

    def below(self, bound):
        threshold = ((1 << 64) - bound) % bound
        while True:
            x = self.next()
            if x >= threshold:
                return x % bound

    def partial_shuffle(self, items, count):
        n = len(items)
        count = min(count, n)
        i = 0
        while i < count and i + 1 < n:
            j = i + self.below(n - i)
            items[i], items[j] = items[j], items[i]
            i += 1
        return items


def self_check():
    g = MT64(5489)
    for _ in range(9999):
        g.next()
    assert g.next() == 9981545732273789042


if __name__ == "__main__":
    self_check()
    print("mt19937_64 reference ok")
