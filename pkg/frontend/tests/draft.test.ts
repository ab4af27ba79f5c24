import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { mountDashboard } from "../src/render.js";
import type { Bundle } from "../src/types.js";
import { installFetch, jsonResponse, loadBundle } from "./helpers.js";

afterEach(() => {
  vi.unstubAllGlobals();
  document.body.innerHTML = "";
});

function mountWithSelection(bundle: Bundle) {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const dashboard = mountDashboard(root, bundle, new ApiClient());
  const checkbox = root.querySelector(".insight-selector") as HTMLInputElement;
  checkbox.click();
  return { root, dashboard };
}

describe("draft button state", () => {
  it("is disabled while nothing is selected", () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    mountDashboard(root, loadBundle(), new ApiClient());
    const button = root.querySelector(".draft-button") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
  });

  it("enables once an insight is selected", () => {
    const { root } = mountWithSelection(loadBundle());
    const button = root.querySelector(".draft-button") as HTMLButtonElement;
    expect(button.disabled).toBe(false);
  });
});

describe("drafting a message", () => {
  it("posts the selection and renders the returned text editable", async () => {
    const bundle = loadBundle();
    const selectedId = bundle.sections.patient_data_insights[0].id;
    const activityId = bundle.suggested_activities[0].id;
    const replyText = "Hi Sam, thanks for checking in this week.";

    const spy = installFetch((url, init) => {
      expect(url).toBe(`/api/patients/${bundle.patient_id}/draft-message`);
      expect(init?.method).toBe("POST");
      const body = JSON.parse(String(init?.body));
      expect(body).toEqual({
        insight_ids: [selectedId],
        activity_ids: [activityId],
      });
      return jsonResponse({ text: replyText });
    });

    const { root, dashboard } = mountWithSelection(bundle);
    (
      root.querySelector(
        `.activity-selector[data-activity-id="${activityId}"]`,
      ) as HTMLInputElement
    ).click();
    (root.querySelector(".draft-button") as HTMLButtonElement).click();
    await dashboard.whenIdle();

    expect(spy).toHaveBeenCalledTimes(1);
    const editor = root.querySelector(".draft-text") as HTMLTextAreaElement;
    expect(editor).not.toBeNull();
    expect(editor.value).toBe(replyText);
    expect(editor.readOnly).toBe(false);
  });

  it("keeps clinician edits across unrelated re-renders", async () => {
    const bundle = loadBundle();
    installFetch(() => jsonResponse({ text: "Draft body." }));
    const { root, dashboard } = mountWithSelection(bundle);
    (root.querySelector(".draft-button") as HTMLButtonElement).click();
    await dashboard.whenIdle();

    const editor = root.querySelector(".draft-text") as HTMLTextAreaElement;
    editor.value = "Draft body, revised by hand.";
    editor.dispatchEvent(new Event("input", { bubbles: true }));

    // An unrelated state change re-renders the whole dashboard.
    (
      root.querySelector('.tag-filter[data-tag="biological"]') as HTMLElement
    ).click();
    const after = root.querySelector(".draft-text") as HTMLTextAreaElement;
    expect(after.value).toBe("Draft body, revised by hand.");
  });

  it("shows a toast and keeps the view intact when the server rejects", async () => {
    const bundle = loadBundle();
    installFetch(() =>
      jsonResponse({ detail: "unknown insight ids: i_bogus" }, 422),
    );
    const { root, dashboard } = mountWithSelection(bundle);
    const cardsBefore = root.querySelectorAll(".insight-card").length;

    (root.querySelector(".draft-button") as HTMLButtonElement).click();
    await dashboard.whenIdle();

    const toast = root.querySelector(".toast-error");
    expect(toast).not.toBeNull();
    expect(toast?.textContent).toContain("unknown insight ids");

    // Prior view state is untouched: no draft text appears, the
    // selection and the card grid are exactly as they were.
    expect(root.querySelector(".draft-text")).toBeNull();
    expect(root.querySelectorAll(".insight-card")).toHaveLength(cardsBefore);
    expect(dashboard.state.selectedInsights.size).toBe(1);
    const button = root.querySelector(".draft-button") as HTMLButtonElement;
    expect(button.disabled).toBe(false);
  });

  it("shows a toast when the network itself fails", async () => {
    const bundle = loadBundle();
    installFetch(() => {
      throw new TypeError("fetch failed");
    });
    const { root, dashboard } = mountWithSelection(bundle);
    (root.querySelector(".draft-button") as HTMLButtonElement).click();
    await dashboard.whenIdle();
    expect(root.querySelector(".toast-error")?.textContent).toContain(
      "could not be reached",
    );
  });
});
