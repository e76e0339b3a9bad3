export * from "./types.js";
export * from "./client.js";
export * from "./state.js";
export * from "./histogram.js";
export * from "./render.js";
export * from "./controller.js";
