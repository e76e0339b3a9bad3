/** Equal-width binning over the schema-declared range (20 bins, matching the
 * service's summary histograms bin for bin). */

export const HISTOGRAM_BINS = 20;

export interface HistogramModel {
  edges: number[];
  counts: number[];
  /** position of the marked mean, as a fraction of the range [0, 1] */
  meanFraction: number;
  mean: number;
  total: number;
}

export function binCounts(values: number[], lo: number, hi: number, bins = HISTOGRAM_BINS): number[] {
  const counts = new Array<number>(bins).fill(0);
  const width = (hi - lo) / bins;
  for (const v of values) {
    let b = Math.floor((v - lo) / width);
    if (b === bins && v === hi) b = bins - 1; // right edge is inclusive
    if (b >= 0 && b < bins) counts[b] += 1;
  }
  return counts;
}

export function histogramModel(
  edges: number[],
  counts: number[],
  mean: number,
): HistogramModel {
  const lo = edges[0];
  const hi = edges[edges.length - 1];
  const span = hi - lo || 1;
  return {
    edges,
    counts,
    mean,
    meanFraction: Math.min(1, Math.max(0, (mean - lo) / span)),
    total: counts.reduce((a, b) => a + b, 0),
  };
}
