/* =========================================
   Entry point

   Resolves which patient to show (the ?patient= query parameter,
   falling back to the first listed patient), fetches that
   patient's bundle and mounts the dashboard.
   ========================================= */

import { ApiClient } from "./api.js";
import { mountDashboard } from "./render.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (root === null) {
    throw new Error("missing #app mount point");
  }
  const api = new ApiClient();

  const params = new URLSearchParams(window.location.search);
  let patientId = params.get("patient");
  if (patientId === null) {
    const patients = await api.listPatients();
    if (patients.length === 0) {
      root.textContent = "No patients available.";
      return;
    }
    patientId = patients[0].patient_id;
  }

  const sessionParam = params.get("session");
  const session = sessionParam === null ? undefined : Number(sessionParam);
  const bundle = await api.getBundle(patientId, session);
  mountDashboard(root, bundle, api);
}

boot().catch((error) => {
  const root = document.getElementById("app");
  if (root !== null) {
    root.textContent = `Failed to load dashboard: ${String(error)}`;
  }
});
