/** Agent chat view-model: thought/action/observation steps plus the answer. */

import type { Transcript } from "./types.js";

export interface ChatStep {
  index: number;
  thought: string;
  action: string | null;
  actionInput: string | null;
  observation: string | null;
  /** steps with an action render collapsed tool detail */
  collapsible: boolean;
}

export interface ChatModel {
  question: string;
  steps: ChatStep[];
  answer: string;
  budgetExhausted: boolean;
}

export function buildChat(transcript: Transcript): ChatModel {
  const steps = transcript.scratchpad.map((step, index) => ({
    index,
    thought: step.thought,
    action: step.action,
    actionInput: step.action_input,
    observation: step.observation,
    collapsible: step.action !== null,
  }));
  return {
    question: transcript.question,
    steps,
    answer: transcript.answer ?? transcript.final_answer ?? "I don't know",
    budgetExhausted: transcript.budget_exhausted,
  };
}
