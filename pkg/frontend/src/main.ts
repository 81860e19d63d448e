// Page bootstrap: read config, render the session form, wire everything.
//
// The API base URL is configurable via ?api=...; qtype and I can be
// preset the same way (?qtype=is_in&I=4).

import { ApiClient } from "./api.js";
import { AnnotationController } from "./controller.js";
import { installKeyboard } from "./keyboard.js";
import { mount } from "./view.js";
import type { QuestionKind } from "./types.js";

function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const apiBase = params.get("api") ?? "http://127.0.0.1:8000";
  const api = new ApiClient(apiBase);
  const controller = new AnnotationController(api);

  const form = document.getElementById("session-form") as HTMLFormElement;
  const qtypeInput = document.getElementById("qtype") as HTMLSelectElement;
  const itemsInput = document.getElementById("items") as HTMLInputElement;
  const root = document.getElementById("annotation-root") as HTMLElement;

  if (params.get("qtype")) qtypeInput.value = params.get("qtype")!;
  if (params.get("I")) itemsInput.value = params.get("I")!;

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const qtype = qtypeInput.value as QuestionKind;
    const items = Number(itemsInput.value);
    void controller.startSession(qtype, items);
  });

  controller.subscribe((state) => {
    form.style.display = state.phase === "idle" || state.sessionId === null ? "" : "none";
  });

  mount(controller, root);
  installKeyboard(controller, window);
}

document.addEventListener("DOMContentLoaded", bootstrap);
