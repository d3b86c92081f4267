/** Shared plumbing handed to every view. */

import type { Api } from "./api.js";
import type { StreamHandle, SubscribeHandlers, SubscribeOptions } from "./sse.js";
import type { Registry } from "./state.js";

export type SubscribeFn = (
  url: string,
  handlers: SubscribeHandlers,
  options?: SubscribeOptions,
) => StreamHandle;

export interface AppContext {
  api: Api;
  subscribe: SubscribeFn;
  registry: Registry;
  navigate(hash: string): void;
}

export interface View {
  dispose?(): void;
}
