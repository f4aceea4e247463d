/** Deterministic synthetic dataset: 7 parts, one common-denominator signal pair. */

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function syntheticCsv(n = 200, j = 7, seed = 20260810): string {
  const rng = mulberry32(seed);
  const normal = (): number => {
    const u = Math.max(rng(), 1e-12);
    const v = rng();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  };
  const parts = Array.from({ length: j }, (_, k) => `p${k}`);
  const lines = [["sample_id", ...parts, "y"].join(",")];
  for (let i = 0; i < n; i++) {
    const logs = Array.from({ length: j }, normal);
    // signal: 1.5*log(p0/p1) + 1.0*log(p2/p1); p1 is the natural ALR denominator
    const eta = 0.2 + 1.5 * (logs[0]! - logs[1]!) + 1.0 * (logs[2]! - logs[1]!);
    const p = 1 / (1 + Math.exp(-eta));
    const y = rng() < p ? 1 : 0;
    lines.push([`s${i}`, ...logs.map((v) => Math.exp(v).toPrecision(17)), String(y)].join(","));
  }
  return lines.join("\n") + "\n";
}
