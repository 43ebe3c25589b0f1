// Report rendering model and download helper. The table mirrors the
// backend's metric set; downloaded bytes come straight from the API client
// so they are identical to the raw backend response.

import type { I18n } from "./i18n.js";

export const REPORT_METRICS = [
  "wer",
  "levenshtein",
  "target_bytes",
  "byte_difference",
  "target_characters",
  "character_difference",
] as const;

export interface ReportAggregates {
  n: number;
  metrics: Record<string, { mean: number; sd: number | null }>;
}

export interface ReportComparison {
  metric: string;
  mean_difference: number;
  sd_difference: number;
  t_statistic: number | string;
  degrees_of_freedom: number;
  p_value: number;
  alpha: number;
  significant: boolean;
  degenerate: boolean;
}

export interface ReportJson {
  schema: string;
  baseline: { source_bytes: number; source_characters: number };
  alpha: number;
  rows: Array<Record<string, unknown>>;
  aggregates: Record<string, ReportAggregates>;
  comparisons: ReportComparison[];
  warnings: string[];
}

function formatValue(metric: string, value: number | null | undefined): string {
  if (value === null || value === undefined) {
    return "";
  }
  return metric === "wer" || metric === "p" ? value.toFixed(4) : value.toFixed(1);
}

export interface ReportTable {
  header: string[];
  rows: string[][];
}

/** One row per metric: office mean/SD, field mean/SD, and the comparison
 * (difference mean/SD plus the one-tailed p) where one exists. */
export function reportTable(report: ReportJson, i18n: I18n): ReportTable {
  const header = [
    i18n.t("report.column.metric"),
    i18n.t("report.column.officeMean"),
    i18n.t("report.column.officeSd"),
    i18n.t("report.column.fieldMean"),
    i18n.t("report.column.fieldSd"),
    i18n.t("report.column.diffMean"),
    i18n.t("report.column.diffSd"),
    i18n.t("report.column.p"),
  ];
  const comparisons = new Map(report.comparisons.map((c) => [c.metric, c]));
  const rows: string[][] = [];
  for (const metric of REPORT_METRICS) {
    const office = report.aggregates["office"]?.metrics[metric];
    const field = report.aggregates["field"]?.metrics[metric];
    const comparison = comparisons.get(metric);
    rows.push([
      i18n.t(`report.metric.${metric}`),
      formatValue(metric, office?.mean),
      formatValue(metric, office?.sd),
      formatValue(metric, field?.mean),
      formatValue(metric, field?.sd),
      comparison ? formatValue(metric, comparison.mean_difference) : "",
      comparison ? formatValue(metric, comparison.sd_difference) : "",
      comparison ? formatValue("p", comparison.p_value) : "",
    ]);
  }
  return { header, rows };
}

/** Hand the raw bytes to the browser as a file download. */
export function downloadBytes(bytes: Uint8Array, filename: string, mediaType: string): void {
  if (typeof document === "undefined") {
    throw new Error("downloadBytes needs a browser document");
  }
  const blob = new Blob([bytes as BlobPart], { type: mediaType });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}
