// Keyboard shortcuts: digits 1-9 pick the matching displayed class,
// N answers "not included" (which-one) or "no" (is-in), Y answers "yes".

import type { AnnotationController } from "./controller.js";

export function actionForKey(
  controller: AnnotationController,
  key: string,
): (() => Promise<void>) | null {
  const state = controller.getState();
  if (state.phase !== "question" || !state.question) return null;
  const k = key.toLowerCase();
  if (state.question.qtype === "which_one") {
    if (/^[1-9]$/.test(k)) {
      const classId = Number(k);
      if (state.question.question_classes.includes(classId)) {
        return () => controller.choose(classId);
      }
      return null;
    }
    if (k === "n") return () => controller.answerNotIncluded();
    return null;
  }
  if (k === "y") return () => controller.answerYes();
  if (k === "n") return () => controller.answerNo();
  return null;
}

export function installKeyboard(controller: AnnotationController, target: Window): () => void {
  const handler = (event: KeyboardEvent) => {
    if (event.target instanceof HTMLInputElement) return;
    const action = actionForKey(controller, event.key);
    if (action) {
      event.preventDefault();
      void action();
    }
  };
  target.addEventListener("keydown", handler);
  return () => target.removeEventListener("keydown", handler);
}
