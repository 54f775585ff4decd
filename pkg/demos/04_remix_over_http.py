#!/usr/bin/env python3
"""Drive the remix service the way a browser client would.

Spins the app up in-process (no port needed -- `vamix serve` runs the same
app standalone), uploads a mixture with its stems, reads back the session
metadata and spectrogram thumbnail, then renders a couple of slider
settings and saves the returned audio.
"""
from __future__ import annotations

from pathlib import Path

from fastapi.testclient import TestClient

from vamix import AudioClip, synthetic_stem_pair, wav_bytes
from vamix.service import create_app

OUT = Path(__file__).resolve().parent.parent / "demo_out" / "http"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    client = TestClient(create_app())

    harm, perc = synthetic_stem_pair(seed=21, duration_s=4.0)
    mix = AudioClip(harm.samples + perc.samples, harm.sample_rate)

    resp = client.post("/sessions", files=[
        ("mix", ("mix.wav", wav_bytes(mix, format="float32"), "audio/wav")),
        ("stems", ("lead.wav", wav_bytes(harm, format="float32"), "audio/wav")),
        ("stems", ("drums.wav", wav_bytes(perc, format="float32"), "audio/wav")),
    ])
    resp.raise_for_status()
    meta = resp.json()
    sid = meta["id"]
    print(f"session {sid[:8]}… sources={meta['labels']} "
          f"grid={meta['bins']}x{meta['frames']}")

    detail = client.get(f"/sessions/{sid}").json()
    thumb = detail["thumbnail"]
    print(f"thumbnail {len(thumb)}x{len(thumb[0])} for the level meters")

    for name, sliders in [("half_drums", [0.5, 0.25]), ("no_lead", [0.0, 0.5])]:
        r = client.post(f"/sessions/{sid}/remix", json={"gains": sliders})
        r.raise_for_status()
        path = OUT / f"{name}.wav"
        path.write_bytes(r.content)
        print(f"rendered {name}: sliders {sliders} -> {path.name} "
              f"({len(r.content)} bytes)")

    client.delete(f"/sessions/{sid}")
    print("session closed")


if __name__ == "__main__":
    main()
