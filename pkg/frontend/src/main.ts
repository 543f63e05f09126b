import { ApiClient } from "./api.js";
import { ConsoleController } from "./controller.js";
import { render, type Actions } from "./render.js";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("console page is missing the #app mount point");
}

// same-origin by default; ?api=<origin> points the console elsewhere
const base = new URLSearchParams(window.location.search).get("api") ?? "";
const api = new ApiClient(base);
const controller = new ConsoleController(api);

const actions: Actions = {
  submit: (text) => void controller.submit(text),
  sortBy: (key) => controller.setSort(key),
  stlUrl: (species) => api.stlUrl(species),
};

controller.subscribe((state) => render(state, root, actions));
controller.start();
