import { createApi } from "./api.js";
import { createConsole } from "./console.js";

// API base comes from the ?api= query parameter; default is same-origin.
const base = new URLSearchParams(window.location.search).get("api") ?? "";
const root = document.getElementById("app");
if (root !== null) {
  const ui = createConsole(root, createApi(base));
  void ui.init().catch((err) => {
    root.textContent = `failed to reach the search service: ${err}`;
  });
}
