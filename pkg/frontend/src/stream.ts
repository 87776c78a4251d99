/**
 * WebSocket stream subscription feeding the store. On connect (and whenever
 * the store reports a sequence gap) the caller performs a /status resync so
 * the store never renders from a partial view.
 */
import type { StreamEvent } from './types.js';

export interface SocketLike {
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface StreamOptions {
  url: string;
  onEvent: (event: StreamEvent) => void;
  onDisconnect?: () => void;
  socketFactory?: SocketFactory;
}

export function connectStream(options: StreamOptions): { close(): void } {
  const factory =
    options.socketFactory ??
    ((url: string) => new WebSocket(url) as unknown as SocketLike);
  const socket = factory(options.url);
  socket.onmessage = (ev) => {
    options.onEvent(JSON.parse(ev.data) as StreamEvent);
  };
  socket.onclose = () => options.onDisconnect?.();
  socket.onerror = () => socket.close();
  return { close: () => socket.close() };
}
