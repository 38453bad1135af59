/** JSON payload shapes served by the engine gateway. The UI renders these
 * verbatim and never recomputes scores or layout geometry. */
export {};
