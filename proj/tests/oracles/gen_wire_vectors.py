"""Binary frame conformance vectors, encoded with struct independently of the C++ code."""
import json
import math
import struct
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
OUT = ROOT / "fixtures" / "wire"


def tone(freq, frames, amplitude=8000, rate=16000, frame_samples=320):
    n = frames * frame_samples
    samples = [int(round(amplitude * math.sin(2 * math.pi * freq * i / rate))) for i in range(n)]
    return struct.pack("<%dh" % n, *samples)


def frame(seq, pts_ms, pcm):
    return struct.pack(">BIQ", 0x01, seq, pts_ms) + pcm


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    vectors = []

    def add(name, seq, pts, pcm, note):
        data = frame(seq, pts, pcm)
        (OUT / (name + ".bin")).write_bytes(data)
        vectors.append({"name": name, "seq": seq, "pts_ms": pts, "payload_bytes": len(pcm),
                        "total_bytes": len(data), "note": note})

    add("first_frame", 1, 0, bytes(640), "silence, first frame of a session")
    add("ramp", 2, 20, bytes(i % 256 for i in range(640)), "byte ramp payload")
    add("tone_440", 3, 40, tone(440, 1)[:640], "one 20 ms frame of a 440 Hz tone")
    add("short_tail", 7, 120, bytes([0x34, 0x12] * 50), "final partial frame, 100 bytes")
    add("empty", 9, 160, b"", "header only")
    add("max_fields", 0xFFFFFFFF, 0x0123456789ABCDEF, bytes([0xFF, 0x7F]), "extreme header values")
    add("max_payload", 10, 180, bytes((i * 7) % 256 for i in range(65536)), "largest accepted payload")

    (OUT / "manifest.json").write_text(json.dumps({"vectors": vectors}, indent=2, sort_keys=True) + "\n")
    sys.stdout.write("wrote %d vectors\n" % len(vectors))


if __name__ == "__main__":
    main()
