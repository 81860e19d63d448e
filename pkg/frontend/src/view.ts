// DOM rendering. The markup is a pure function of the controller state;
// clicks are dispatched by button id through event delegation.

import type { AnnotationController, UiState } from "./controller.js";

function esc(text: string): string {
  return text.replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]!);
}

export function renderHtml(controller: AnnotationController, state: UiState): string {
  const parts: string[] = [];
  if (state.error) {
    parts.push(
      `<div class="banner error">${esc(state.error)} ` +
        `<button data-action="retry">retry</button></div>`,
    );
  }
  if (state.notice) {
    parts.push(`<div class="banner notice">${esc(state.notice)}</div>`);
  }
  if (state.lastLabel) {
    parts.push(
      `<div class="assigned">assigned label: {${state.lastLabel.join(", ")}}</div>`,
    );
  }
  if (state.stats) {
    const total = state.stats.answered + state.stats.remaining;
    parts.push(
      `<div class="progress">answered ${state.stats.answered} / ${total}</div>`,
    );
  }
  if (state.phase === "question" || state.phase === "submitting") {
    const q = state.question!;
    if (q.image) {
      parts.push(`<img class="instance" alt="instance ${esc(q.instance_id)}" src="data:image/png;base64,${q.image}">`);
    }
    parts.push(`<h2 class="question">${esc(controller.questionText())}</h2>`);
    const disabled = state.phase === "submitting" ? " disabled" : "";
    const buttons = controller
      .buttons()
      .map(
        (b) =>
          `<button class="answer" data-answer="${b.id}"${disabled}>` +
          `${esc(b.label)}${b.hotkey ? ` <kbd>${esc(b.hotkey)}</kbd>` : ""}</button>`,
      );
    parts.push(`<div class="answers">${buttons.join("")}</div>`);
  } else if (state.phase === "done" && state.stats) {
    const rows = Object.entries(state.stats.label_size_histogram)
      .sort((a, b) => Number(a[0]) - Number(b[0]))
      .map(([size, count]) => `<tr><td>${esc(size)}</td><td>${count}</td></tr>`)
      .join("");
    parts.push(
      `<div class="complete"><h2>all instances labeled</h2>` +
        `<table class="histogram"><thead><tr><th>label size</th><th>count</th></tr></thead>` +
        `<tbody>${rows}</tbody></table></div>`,
    );
  } else if (state.phase === "starting") {
    parts.push(`<p class="loading">starting session…</p>`);
  }
  return parts.join("\n");
}

export function mount(controller: AnnotationController, root: HTMLElement): void {
  const redraw = (state: UiState) => {
    root.innerHTML = renderHtml(controller, state);
  };
  controller.subscribe(redraw);
  redraw(controller.getState());

  root.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("button");
    if (!target) return;
    if (target.dataset.action === "retry") {
      void controller.retry();
      return;
    }
    const id = target.dataset.answer;
    if (!id) return;
    const spec = controller.buttons().find((b) => b.id === id);
    if (!spec) return;
    const a = spec.action;
    if (a.kind === "chose") void controller.choose(a.chosen);
    else if (a.kind === "not_included") void controller.answerNotIncluded();
    else if (a.kind === "yes") void controller.answerYes();
    else void controller.answerNo();
  });
}
