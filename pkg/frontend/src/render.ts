/* =========================================
   Dashboard rendering

   One Dashboard instance owns a bundle, a view state and a DOM
   subtree.  Every interaction routes through a pure state
   transition followed by a full re-render, so the DOM is always
   a function of (bundle, state, fetched drill-down, draft text).

   Layout is the fixed four-section column:

     S1 Medical History
     S2 Session Recap          (expanded on first render)
     S3 Patient Data Insights  (filterable card grid)
     S4 Summary Today          (selection review + draft message)

   plus an optional drill-down side panel for a single fact.
   ========================================= */

import { ApiClient, ApiError } from "./api.js";
import { renderChart } from "./charts.js";
import { renderHighlightedText } from "./highlight.js";
import {
  SECTION_ORDER,
  SECTION_TITLES,
  activateSection,
  closeDrilldown,
  initialState,
  openDrilldown,
  primaryFactId,
  selectedInsightList,
  toggleFilterTag,
  toggleInsightSelection,
  toggleSection,
  visibleInsights,
} from "./state.js";
import type { SectionId, ViewState } from "./state.js";
import {
  ALL_TAGS,
  FACT_TYPE_ICONS,
  FACT_TYPE_LABELS,
  NUMERIC_SOURCES,
  SOURCE_COLORS,
  SOURCE_ICONS,
  SOURCE_LABELS,
  TAG_LABELS,
} from "./theme.js";
import type {
  Bundle,
  DrilldownPayload,
  EvidenceDocument,
  FactType,
  Insight,
} from "./types.js";
import { SUPPORTED_BUNDLE_VERSION, combinedText } from "./types.js";

const FACT_TYPE_ORDER: FactType[] = [
  "comparison",
  "trend",
  "outlier",
  "extreme",
  "difference",
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export class Dashboard {
  state: ViewState;

  private drilldownData: DrilldownPayload | null = null;
  private readonly selectedActivities = new Set<string>();
  private draftText: string | null = null;
  private tasks: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly bundle: Bundle,
    private readonly api: ApiClient,
  ) {
    this.state = initialState();
  }

  /** Resolves once every in-flight handler has settled. */
  whenIdle(): Promise<unknown> {
    return this.tasks;
  }

  private track(work: () => Promise<void>): void {
    this.tasks = this.tasks.then(work, work);
  }

  private setState(next: ViewState): void {
    this.state = next;
    this.render();
  }

  /* =========================================
     Top-level render
     ========================================= */

  render(): void {
    this.root.textContent = "";
    const shell = el("div", "dashboard");

    if (this.bundle.version !== SUPPORTED_BUNDLE_VERSION) {
      const banner = el(
        "div",
        "schema-banner",
        `This bundle uses schema version ${this.bundle.version}, but this ` +
          `dashboard supports version ${SUPPORTED_BUNDLE_VERSION}. ` +
          "Some content may not display correctly.",
      );
      banner.setAttribute("role", "alert");
      shell.appendChild(banner);
    }

    shell.appendChild(this.renderHeader());
    shell.appendChild(this.renderTimeline());

    const main = el("main", "section-column");
    for (const id of SECTION_ORDER) {
      main.appendChild(this.renderSection(id));
    }
    shell.appendChild(main);

    if (this.state.openDrilldown !== null && this.drilldownData !== null) {
      shell.appendChild(this.renderDrilldown(this.drilldownData));
    }

    shell.appendChild(el("div", "toast-region"));
    this.root.appendChild(shell);
  }

  private renderHeader(): HTMLElement {
    const { patient, session_index, timeline } = this.bundle;
    const header = el("header", "patient-header");
    header.appendChild(el("h1", "patient-name", patient.name));
    header.appendChild(
      el(
        "p",
        "patient-meta",
        `${patient.pronouns} · age ${patient.age} · session ${session_index} of ` +
          `${timeline.sessions.length} · today ${timeline.today}`,
      ),
    );
    return header;
  }

  private renderTimeline(): HTMLElement {
    const nav = el("nav", "timeline");
    nav.setAttribute("aria-label", "Dashboard timeline");

    for (const session of this.bundle.timeline.sessions) {
      nav.appendChild(
        el("span", "timeline-chip", `Session ${session.index} · ${session.date}`),
      );
    }
    nav.appendChild(
      el("span", "timeline-chip timeline-chip-today", `Today · ${this.bundle.timeline.today}`),
    );

    for (const id of SECTION_ORDER) {
      const button = el("button", "timeline-jump", SECTION_TITLES[id]);
      button.type = "button";
      button.dataset.target = id;
      button.setAttribute("aria-current", String(this.state.activeSection === id));
      button.addEventListener("click", () => {
        this.setState(activateSection(this.state, id));
        const section = this.root.querySelector(`[data-section-id="${id}"]`);
        (section as HTMLElement | null)?.scrollIntoView?.({ block: "start" });
      });
      nav.appendChild(button);
    }
    return nav;
  }

  /* =========================================
     Sections
     ========================================= */

  private renderSection(id: SectionId): HTMLElement {
    const expanded = this.state.expandedSections.has(id);
    const section = el("section", "dashboard-section");
    section.dataset.sectionId = id;
    section.dataset.expanded = String(expanded);

    const toggle = el("button", "section-toggle");
    toggle.type = "button";
    toggle.setAttribute("aria-expanded", String(expanded));
    toggle.appendChild(el("h2", "section-title", SECTION_TITLES[id]));
    toggle.appendChild(el("span", "section-caret", expanded ? "▾" : "▸"));
    toggle.addEventListener("click", () => {
      this.setState(toggleSection(this.state, id));
    });
    section.appendChild(toggle);

    const body = el("div", "section-body");
    if (!expanded) {
      body.hidden = true;
    }
    switch (id) {
      case "S1":
        this.fillHistory(body);
        break;
      case "S2":
        this.fillRecap(body);
        break;
      case "S3":
        this.fillInsights(body);
        break;
      case "S4":
        this.fillSummary(body);
        break;
    }
    section.appendChild(body);
    return section;
  }

  private fillHistory(body: HTMLElement): void {
    const list = el("ul", "history-list");
    for (const item of this.bundle.sections.medical_history) {
      const entry = el("li", "history-item");
      entry.appendChild(el("span", "history-onset", item.onset));
      entry.appendChild(el("span", "history-text", item.text));
      list.appendChild(entry);
    }
    if (this.bundle.sections.medical_history.length === 0) {
      list.appendChild(el("li", "history-item history-empty", "No recorded history."));
    }
    body.appendChild(list);
  }

  private fillRecap(body: HTMLElement): void {
    const kindTitles: Record<string, string> = {
      subjective_objective: "Subjective / Objective",
      assessment: "Assessment",
      plan: "Plan",
    };
    const row = el("div", "recap-row");
    for (const card of this.bundle.sections.session_recap) {
      const article = el("article", "recap-card");
      article.dataset.kind = card.kind;
      article.appendChild(
        el("h3", "recap-kind", kindTitles[card.kind] ?? card.kind),
      );
      article.appendChild(el("p", "recap-text", card.text));
      for (const span of card.evidence) {
        const quote = el("blockquote", "recap-evidence", span.quoted_text);
        quote.dataset.documentId = span.document_id;
        article.appendChild(quote);
      }
      row.appendChild(article);
    }
    body.appendChild(row);
  }

  private fillInsights(body: HTMLElement): void {
    body.appendChild(this.renderFilterBar());

    const grid = el("div", "insight-grid");
    for (const insight of visibleInsights(this.bundle, this.state)) {
      grid.appendChild(this.renderInsightCard(insight));
    }
    body.appendChild(grid);
  }

  private renderFilterBar(): HTMLElement {
    const bar = el("div", "filter-bar");
    bar.appendChild(el("span", "filter-label", "Filter:"));
    for (const tag of ALL_TAGS) {
      const active = this.state.filterTags.has(tag);
      const button = el("button", "tag-filter", TAG_LABELS[tag]);
      button.type = "button";
      button.dataset.tag = tag;
      button.setAttribute("aria-pressed", String(active));
      button.addEventListener("click", () => {
        this.setState(toggleFilterTag(this.state, tag));
      });
      bar.appendChild(button);
    }
    const total = this.bundle.sections.patient_data_insights.length;
    const shown = visibleInsights(this.bundle, this.state).length;
    bar.appendChild(
      el("span", "filter-count", `${shown} of ${total} insights`),
    );
    return bar;
  }

  private cardFactTypes(insight: Insight): FactType[] {
    const present = new Set<FactType>();
    for (const factId of insight.fact_ids) {
      const fact = this.bundle.facts[factId];
      if (fact !== undefined) {
        present.add(fact.fact_type);
      }
    }
    return FACT_TYPE_ORDER.filter((t) => present.has(t));
  }

  private renderInsightCard(insight: Insight): HTMLElement {
    const card = el("article", "insight-card");
    card.dataset.insightId = insight.id;
    card.dataset.origin = insight.origin;

    card.appendChild(el("p", "insight-text", combinedText(insight.text)));

    if (insight.question_id !== null) {
      const question = this.bundle.questions[insight.question_id];
      if (question !== undefined) {
        card.appendChild(el("p", "insight-question", `Q: ${question.text}`));
      }
    }

    const icons = el("div", "insight-icons");
    for (const factType of this.cardFactTypes(insight)) {
      const icon = el("span", "fact-type-icon", FACT_TYPE_ICONS[factType]);
      icon.dataset.factType = factType;
      icon.title = FACT_TYPE_LABELS[factType];
      icons.appendChild(icon);
    }
    for (const source of insight.sources) {
      const chip = el("span", "source-icon", SOURCE_ICONS[source]);
      chip.dataset.source = source;
      chip.title = SOURCE_LABELS[source];
      chip.style.backgroundColor = SOURCE_COLORS[source];
      icons.appendChild(chip);
    }
    card.appendChild(icons);

    const controls = el("div", "insight-controls");

    const selectLabel = el("label", "insight-select");
    const checkbox = el("input", "insight-selector") as HTMLInputElement;
    checkbox.type = "checkbox";
    checkbox.checked = this.state.selectedInsights.has(insight.id);
    checkbox.addEventListener("change", () => {
      this.setState(toggleInsightSelection(this.state, this.bundle, insight.id));
    });
    selectLabel.appendChild(checkbox);
    selectLabel.appendChild(
      document.createTextNode(" Include in summary"),
    );
    controls.appendChild(selectLabel);

    const drill = el("button", "drilldown-button", "View evidence");
    drill.type = "button";
    drill.dataset.factId = primaryFactId(insight);
    drill.addEventListener("click", () => {
      this.requestDrilldown(primaryFactId(insight));
    });
    controls.appendChild(drill);

    card.appendChild(controls);
    return card;
  }

  private fillSummary(body: HTMLElement): void {
    const selected = selectedInsightList(this.bundle, this.state);

    const heading = el("h3", "summary-heading", "Selected insights");
    body.appendChild(heading);
    if (selected.length === 0) {
      body.appendChild(
        el("p", "summary-empty", "No insights selected yet. Pick cards above to build a summary."),
      );
    } else {
      const list = el("ul", "summary-selected");
      for (const insight of selected) {
        const item = el("li", "summary-item", combinedText(insight.text));
        item.dataset.insightId = insight.id;
        list.appendChild(item);
      }
      body.appendChild(list);
    }

    body.appendChild(el("h3", "summary-heading", "Suggested activities"));
    const activities = el("ul", "activity-list");
    for (const activity of this.bundle.suggested_activities) {
      const item = el("li", "activity-item");
      const label = el("label");
      const checkbox = el("input", "activity-selector") as HTMLInputElement;
      checkbox.type = "checkbox";
      checkbox.dataset.activityId = activity.id;
      checkbox.checked = this.selectedActivities.has(activity.id);
      checkbox.addEventListener("change", () => {
        if (checkbox.checked) {
          this.selectedActivities.add(activity.id);
        } else {
          this.selectedActivities.delete(activity.id);
        }
      });
      label.appendChild(checkbox);
      label.appendChild(document.createTextNode(` ${activity.label}`));
      item.appendChild(label);
      activities.appendChild(item);
    }
    body.appendChild(activities);

    const draftButton = el("button", "draft-button", "Draft patient message");
    draftButton.type = "button";
    draftButton.disabled = selected.length === 0;
    draftButton.addEventListener("click", () => {
      this.requestDraft();
    });
    body.appendChild(draftButton);

    if (this.draftText !== null) {
      const editor = el("textarea", "draft-text") as HTMLTextAreaElement;
      editor.value = this.draftText;
      editor.rows = 6;
      editor.addEventListener("input", () => {
        this.draftText = editor.value;
      });
      body.appendChild(editor);
    }
  }

  /* =========================================
     Drill-down panel
     ========================================= */

  private renderDrilldown(payload: DrilldownPayload): HTMLElement {
    const panel = el("aside", "drilldown-panel");
    panel.dataset.factId = payload.fact.id;

    const close = el("button", "drilldown-close", "Close");
    close.type = "button";
    close.addEventListener("click", () => {
      this.drilldownData = null;
      this.setState(closeDrilldown(this.state));
    });
    panel.appendChild(close);

    panel.appendChild(
      el("p", "drilldown-description", payload.fact.description),
    );

    // Numeric evidence first (passive sensing, then surveys), each a
    // finding bullet paired with its annotated chart; documents after.
    if (NUMERIC_SOURCES.includes(payload.fact.source)) {
      panel.appendChild(this.renderNumericBlock(payload));
    }
    if (payload.evidence_documents.length > 0) {
      panel.appendChild(this.renderDocumentBlock(payload.evidence_documents));
    }
    return panel;
  }

  private renderNumericBlock(payload: DrilldownPayload): HTMLElement {
    const block = el("section", "drilldown-charts");
    block.appendChild(el("h3", "drilldown-heading", "Data evidence"));

    const pair = el("div", "drilldown-pair");
    pair.dataset.source = payload.fact.source;
    const bullet = el("p", "drilldown-bullet", `• ${payload.fact.description}`);
    pair.appendChild(bullet);
    pair.appendChild(
      renderChart(payload.chart, SOURCE_COLORS[payload.fact.source]),
    );
    block.appendChild(pair);
    return block;
  }

  private lastSessionDate(): string | null {
    const sessions = this.bundle.timeline.sessions;
    if (sessions.length === 0) {
      return null;
    }
    return sessions[sessions.length - 1].date;
  }

  private renderDocumentBlock(documents: EvidenceDocument[]): HTMLElement {
    const block = el("section", "drilldown-documents");
    block.appendChild(el("h3", "drilldown-heading", "Document evidence"));

    const currentDate = this.lastSessionDate();
    for (const doc of documents) {
      const article = el("article", "evidence-document");
      article.dataset.documentId = doc.id;
      article.dataset.kind = doc.kind;
      const isCurrent = currentDate !== null && doc.id.endsWith(currentDate);
      article.dataset.current = String(isCurrent);

      const title = el(
        "h4",
        "evidence-document-title",
        isCurrent ? `${doc.id} (current session)` : doc.id,
      );
      article.appendChild(title);

      const text = el("pre", "document-text");
      text.appendChild(renderHighlightedText(doc.text, doc.spans));
      article.appendChild(text);
      block.appendChild(article);
    }
    return block;
  }

  /* =========================================
     Async interactions
     ========================================= */

  private requestDrilldown(factId: string): void {
    this.track(async () => {
      try {
        const result = await this.api.getDrilldown(this.bundle.patient_id, factId);
        if (result.stale) {
          return;
        }
        this.drilldownData = result.value;
        this.setState(openDrilldown(this.state, this.bundle, factId));
      } catch (error) {
        this.showToast(describeError(error));
      }
    });
  }

  private requestDraft(): void {
    const insightIds = selectedInsightList(this.bundle, this.state).map(
      (i) => i.id,
    );
    const activityIds = this.bundle.suggested_activities
      .map((a) => a.id)
      .filter((id) => this.selectedActivities.has(id));
    this.track(async () => {
      try {
        const text = await this.api.draftMessage(
          this.bundle.patient_id,
          insightIds,
          activityIds,
        );
        this.draftText = text;
        this.render();
      } catch (error) {
        // Failure must not disturb the view: no state change, no
        // re-render — just a transient notice.
        this.showToast(describeError(error));
      }
    });
  }

  private showToast(message: string): void {
    const region = this.root.querySelector(".toast-region");
    if (region === null) {
      return;
    }
    const toast = el("div", "toast toast-error", message);
    toast.setAttribute("role", "status");
    region.appendChild(toast);
    setTimeout(() => {
      toast.remove();
    }, 6000);
  }
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    return `Request failed: ${error.message}`;
  }
  return "Request failed: the server could not be reached.";
}

/** Convenience used by main.ts and tests alike. */
export function mountDashboard(
  root: HTMLElement,
  bundle: Bundle,
  api: ApiClient,
): Dashboard {
  const dashboard = new Dashboard(root, bundle, api);
  dashboard.render();
  return dashboard;
}
