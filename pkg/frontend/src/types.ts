/* =========================================
   Bundle wire types

   These mirror the JSON emitted by the backend's
   GET /api/patients/{id}/bundle endpoint.  Every field is
   data the server already serialized; the UI never derives
   clinical content on its own.
   ========================================= */

export const SUPPORTED_BUNDLE_VERSION = "1";

export type FactType =
  | "comparison"
  | "trend"
  | "outlier"
  | "extreme"
  | "difference";

export type SourceType =
  | "passive_sensing"
  | "survey_scores"
  | "clinical_notes"
  | "transcripts";

export type InsightTag = "biological" | "psychological" | "social";

export type InsightOrigin = "guided" | "exploratory";

/** Half-open character range into a document's text, in code points. */
export interface EvidenceSpan {
  document_id: string;
  start: number;
  end: number;
  quoted_text: string;
}

export interface DateInterval {
  kind: "interval";
  start: string;
  end: string;
}

export interface IntervalPair {
  kind: "interval_pair";
  first: DateInterval;
  second: DateInterval;
}

export interface SinglePoint {
  kind: "point";
  date: string;
}

export type FactTime = DateInterval | IntervalPair | SinglePoint;

export interface FactEntity {
  feature_id: string;
  label: string;
}

export interface DataFact {
  id: string;
  fact_type: FactType;
  time: FactTime;
  value: number | null;
  attribute: string;
  entity: FactEntity;
  source: SourceType;
  discovery: InsightOrigin;
  description: string;
  significant: boolean;
  p_value: number | null;
  salience: number;
}

export interface SeriesPoint {
  date: string;
  value: number | null;
}

export interface MeanLineAnnotation {
  kind: "mean_line";
  value: number;
  interval: { start: string; end: string };
}

export interface TrendSegmentAnnotation {
  kind: "trend_segment";
  start_point: { date: string; value: number };
  end_point: { date: string; value: number };
}

export interface HighlightPointAnnotation {
  kind: "highlight_point";
  date: string;
  value: number;
}

export interface SplitMarkerAnnotation {
  kind: "split_marker";
  date: string;
}

export type ChartAnnotation =
  | MeanLineAnnotation
  | TrendSegmentAnnotation
  | HighlightPointAnnotation
  | SplitMarkerAnnotation;

export interface ChartSpec {
  fact_id: string;
  chart_kind: "line" | "bar";
  series: SeriesPoint[];
  annotations: ChartAnnotation[];
  y_label: string;
}

export interface InsightText {
  fact_clause: string;
  implication: string;
}

export interface Insight {
  id: string;
  text: InsightText;
  tags: InsightTag[];
  sources: SourceType[];
  fact_ids: string[];
  origin: InsightOrigin;
  question_id: string | null;
}

export interface RecapCard {
  kind: "subjective_objective" | "assessment" | "plan";
  text: string;
  evidence: EvidenceSpan[];
}

export interface HistoryItem {
  onset: string;
  text: string;
}

export interface ClinicalQuestion {
  id: string;
  text: string;
  topic_id: string;
  target_features: string[];
  doc_kind: string;
  span: EvidenceSpan | null;
}

export interface SourceDocument {
  kind: string;
  text: string;
}

export interface TimelineSession {
  index: number;
  date: string;
  note_id: string;
  transcript_id: string;
}

export interface PatientProfile {
  name: string;
  age: number;
  pronouns: string;
}

export interface SuggestedActivity {
  id: string;
  label: string;
}

export interface BundleSections {
  medical_history: HistoryItem[];
  session_recap: RecapCard[];
  patient_data_insights: Insight[];
  summary_pool: string[];
}

export interface Bundle {
  version: string;
  patient_id: string;
  session_index: number;
  patient: PatientProfile;
  timeline: { sessions: TimelineSession[]; today: string };
  sections: BundleSections;
  facts: Record<string, DataFact>;
  charts: Record<string, ChartSpec>;
  documents: Record<string, SourceDocument>;
  questions: Record<string, ClinicalQuestion>;
  suggested_activities: SuggestedActivity[];
}

/* =========================================
   Other endpoint payloads
   ========================================= */

export interface PatientListing {
  patient_id: string;
  name: string;
}

export interface EvidenceDocument {
  id: string;
  kind: string;
  text: string;
  spans: EvidenceSpan[];
}

export interface DrilldownPayload {
  fact: DataFact;
  chart: ChartSpec;
  evidence_documents: EvidenceDocument[];
}

export interface DraftMessageResponse {
  text: string;
}

/** Two-part insight text rendered the way the backend composes it. */
export function combinedText(text: InsightText): string {
  return `${text.fact_clause}, suggesting ${text.implication}.`;
}
