/* =========================================
   Fixed visual vocabulary

   One place defines every icon and color so cards, charts and
   the drill-down panel stay consistent.  Values are deliberately
   hard-coded: the mapping is part of the product's visual
   language, not something a deployment should vary.
   ========================================= */

import type { FactType, InsightTag, SourceType } from "./types.js";

/** Glyph shown on an insight card for each fact type it cites. */
export const FACT_TYPE_ICONS: Record<FactType, string> = {
  comparison: "⇄",
  trend: "↗",
  outlier: "✶",
  extreme: "▲",
  difference: "Δ",
};

export const FACT_TYPE_LABELS: Record<FactType, string> = {
  comparison: "comparison",
  trend: "trend",
  outlier: "outlier",
  extreme: "extreme value",
  difference: "difference",
};

/** One color per data channel, used for source icons and chart accents. */
export const SOURCE_COLORS: Record<SourceType, string> = {
  passive_sensing: "#2f6fb2",
  survey_scores: "#7a4f9e",
  clinical_notes: "#2e7d52",
  transcripts: "#b3692a",
};

export const SOURCE_LABELS: Record<SourceType, string> = {
  passive_sensing: "passive sensing",
  survey_scores: "survey scores",
  clinical_notes: "clinical notes",
  transcripts: "session transcripts",
};

/** Glyph shown inside a source icon chip. */
export const SOURCE_ICONS: Record<SourceType, string> = {
  passive_sensing: "⌚",
  survey_scores: "☑",
  clinical_notes: "✎",
  transcripts: "🗣",
};

export const TAG_LABELS: Record<InsightTag, string> = {
  biological: "Biological",
  psychological: "Psychological",
  social: "Social",
};

export const ALL_TAGS: InsightTag[] = [
  "biological",
  "psychological",
  "social",
];

/** Sources whose facts carry numeric series (charted in drill-down). */
export const NUMERIC_SOURCES: SourceType[] = [
  "passive_sensing",
  "survey_scores",
];
