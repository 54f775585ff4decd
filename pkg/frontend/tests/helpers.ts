/** Shared test utilities: a small WAV reader and energy helpers. */

export interface DecodedWav {
  samples: Float64Array;
  sampleRate: number;
}

/** Decode mono PCM16 or float32 WAV bytes (all the service emits). */
export function decodeWav(buf: ArrayBuffer): DecodedWav {
  const view = new DataView(buf);
  const tag = (off: number) =>
    String.fromCharCode(
      view.getUint8(off),
      view.getUint8(off + 1),
      view.getUint8(off + 2),
      view.getUint8(off + 3),
    );
  if (tag(0) !== "RIFF" || tag(8) !== "WAVE") {
    throw new Error("not a RIFF/WAVE file");
  }

  let fmt: { codec: number; channels: number; rate: number; bits: number } | null =
    null;
  let offset = 12;
  while (offset + 8 <= view.byteLength) {
    const id = tag(offset);
    const size = view.getUint32(offset + 4, true);
    const body = offset + 8;
    if (id === "fmt ") {
      fmt = {
        codec: view.getUint16(body, true),
        channels: view.getUint16(body + 2, true),
        rate: view.getUint32(body + 4, true),
        bits: view.getUint16(body + 14, true),
      };
    } else if (id === "data") {
      if (!fmt) throw new Error("data before fmt");
      const { codec, channels, rate, bits } = fmt;
      if (channels !== 1) throw new Error(`expected mono, got ${channels}`);
      let samples: Float64Array;
      if (codec === 3 && bits === 32) {
        const n = size / 4;
        samples = new Float64Array(n);
        for (let i = 0; i < n; i++) samples[i] = view.getFloat32(body + 4 * i, true);
      } else if (codec === 1 && bits === 16) {
        const n = size / 2;
        samples = new Float64Array(n);
        for (let i = 0; i < n; i++)
          samples[i] = view.getInt16(body + 2 * i, true) / 32768;
      } else {
        throw new Error(`unsupported codec ${codec}/${bits}`);
      }
      return { samples, sampleRate: rate };
    }
    offset = body + size + (size % 2);
  }
  throw new Error("no data chunk");
}

export function energy(x: Float64Array): number {
  let acc = 0;
  for (let i = 0; i < x.length; i++) acc += x[i] * x[i];
  return acc;
}

export function energyOfDifference(a: Float64Array, b: Float64Array): number {
  const n = Math.min(a.length, b.length);
  let acc = 0;
  for (let i = 0; i < n; i++) {
    const d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

export function maxAbsDifference(a: Float64Array, b: Float64Array): number {
  const n = Math.min(a.length, b.length);
  let worst = 0;
  for (let i = 0; i < n; i++) worst = Math.max(worst, Math.abs(a[i] - b[i]));
  return worst;
}

export function maxAbs(a: Float64Array): number {
  let worst = 0;
  for (let i = 0; i < a.length; i++) worst = Math.max(worst, Math.abs(a[i]));
  return worst;
}

/** dot(a-ref0, basis) / dot(basis, basis): how much of `basis` was added. */
export function projectionCoefficient(
  diff: Float64Array,
  basis: Float64Array,
): number {
  const n = Math.min(diff.length, basis.length);
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += diff[i] * basis[i];
    den += basis[i] * basis[i];
  }
  return num / den;
}
