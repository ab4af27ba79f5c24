/* =========================================
   View state

   The dashboard is read-only over the bundle; all interaction
   state lives in one small immutable record.  Transitions are
   pure functions returning a fresh state, which keeps the two
   structural invariants easy to test:

   - toggling a tag filter off restores exactly the card set
     that was visible before it was toggled on, and
   - the insight selection is independent of section
     expansion, so collapsing and re-expanding a section
     never alters it.
   ========================================= */

import { ALL_TAGS } from "./theme.js";
import type { Bundle, Insight, InsightTag } from "./types.js";

export type SectionId = "S1" | "S2" | "S3" | "S4";

/** Fixed top-to-bottom layout order. */
export const SECTION_ORDER: SectionId[] = ["S1", "S2", "S3", "S4"];

export const SECTION_TITLES: Record<SectionId, string> = {
  S1: "Medical History",
  S2: "Session Recap",
  S3: "Patient Data Insights",
  S4: "Summary Today",
};

export interface ViewState {
  activeSection: SectionId;
  expandedSections: ReadonlySet<SectionId>;
  filterTags: ReadonlySet<InsightTag>;
  selectedInsights: ReadonlySet<string>;
  openDrilldown: string | null;
}

/** Recap opens expanded so the most recent session is visible first. */
export function initialState(): ViewState {
  return {
    activeSection: "S2",
    expandedSections: new Set<SectionId>(["S2"]),
    filterTags: new Set<InsightTag>(),
    selectedInsights: new Set<string>(),
    openDrilldown: null,
  };
}

function withSet<T>(base: ReadonlySet<T>, item: T, present: boolean): Set<T> {
  const next = new Set(base);
  if (present) {
    next.add(item);
  } else {
    next.delete(item);
  }
  return next;
}

/* =========================================
   Transitions
   ========================================= */

export function toggleSection(state: ViewState, id: SectionId): ViewState {
  const expanded = state.expandedSections.has(id);
  return {
    ...state,
    expandedSections: withSet(state.expandedSections, id, !expanded),
  };
}

/** Timeline navigation: make a section current and ensure it is open. */
export function activateSection(state: ViewState, id: SectionId): ViewState {
  return {
    ...state,
    activeSection: id,
    expandedSections: withSet(state.expandedSections, id, true),
  };
}

export function toggleFilterTag(state: ViewState, tag: InsightTag): ViewState {
  if (!ALL_TAGS.includes(tag)) {
    throw new Error(`unknown filter tag: ${tag}`);
  }
  const active = state.filterTags.has(tag);
  return { ...state, filterTags: withSet(state.filterTags, tag, !active) };
}

export function toggleInsightSelection(
  state: ViewState,
  bundle: Bundle,
  insightId: string,
): ViewState {
  if (!bundle.sections.patient_data_insights.some((i) => i.id === insightId)) {
    throw new Error(`unknown insight id: ${insightId}`);
  }
  const selected = state.selectedInsights.has(insightId);
  return {
    ...state,
    selectedInsights: withSet(state.selectedInsights, insightId, !selected),
  };
}

export function openDrilldown(
  state: ViewState,
  bundle: Bundle,
  factId: string,
): ViewState {
  if (!(factId in bundle.facts)) {
    throw new Error(`unknown fact id: ${factId}`);
  }
  return { ...state, openDrilldown: factId };
}

export function closeDrilldown(state: ViewState): ViewState {
  return { ...state, openDrilldown: null };
}

/* =========================================
   Selectors
   ========================================= */

/**
 * Cards shown in the insights section under the current filter.
 *
 * An empty filter means "show everything"; otherwise a card is
 * visible when it shares at least one tag with the filter.  Order
 * always follows the bundle's own ranking.
 */
export function visibleInsights(bundle: Bundle, state: ViewState): Insight[] {
  const all = bundle.sections.patient_data_insights;
  if (state.filterTags.size === 0) {
    return [...all];
  }
  return all.filter((insight) =>
    insight.tags.some((tag) => state.filterTags.has(tag)),
  );
}

/** The fact a card's drill-down control opens: its top-ranked fact. */
export function primaryFactId(insight: Insight): string {
  if (insight.fact_ids.length === 0) {
    throw new Error(`insight ${insight.id} cites no facts`);
  }
  return insight.fact_ids[0];
}

/** Selected insights in bundle order, for the summary and draft body. */
export function selectedInsightList(
  bundle: Bundle,
  state: ViewState,
): Insight[] {
  return bundle.sections.patient_data_insights.filter((i) =>
    state.selectedInsights.has(i.id),
  );
}
