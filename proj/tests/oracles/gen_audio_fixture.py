"""Speech-like test signal: syllable-rate amplitude envelope over two partials plus LCG noise."""
import math
import struct
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
RATE = 16000
SECONDS = 10


def main():
    state = 12345
    out = []
    for i in range(RATE * SECONDS):
        t = i / RATE
        envelope = 0.5 + 0.5 * math.sin(2 * math.pi * 4.0 * t)
        pitch = 140 + 30 * math.sin(2 * math.pi * 0.3 * t)
        voiced = 0.6 * math.sin(2 * math.pi * pitch * t) + 0.25 * math.sin(2 * math.pi * 3 * pitch * t)
        state = (1103515245 * state + 12345) % (1 << 31)
        noise = (state / (1 << 31)) - 0.5
        value = int(9000 * envelope * voiced + 600 * noise)
        out.append(max(-32768, min(32767, value)))
    path = ROOT / "fixtures" / "audio" / "customer_10s.pcm"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(struct.pack("<%dh" % len(out), *out))
    print("wrote", path, len(out) * 2, "bytes")


if __name__ == "__main__":
    main()
