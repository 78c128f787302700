export {
  EngineError,
  ERROR_CODES,
  Transport,
  type Request,
  type Response,
  type OkResponse,
  type ErrResponse,
  type TransportOptions,
} from "./protocol.js";
export {
  ClosedSessionError,
  Engine,
  MaskSession,
  type EngineOptions,
} from "./session.js";
