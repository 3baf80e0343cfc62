/** Shared argument handling for the plot commands. */

export interface CliArgs {
  input: string;
  output: string;
  flags: Set<string>;
}

export function parseArgs(argv: string[], usage: string): CliArgs {
  let input = "";
  let output = "";
  const flags = new Set<string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--in") input = argv[++i] ?? "";
    else if (arg === "--out") output = argv[++i] ?? "";
    else if (arg.startsWith("--")) flags.add(arg.slice(2));
    else throw new Error(`unexpected argument '${arg}'\n${usage}`);
  }
  if (!input || !output) throw new Error(`--in and --out are required\n${usage}`);
  if (!output.endsWith(".svg")) {
    throw new Error(
      `only .svg output is supported (no raster encoder in this toolchain); got '${output}'`
    );
  }
  return { input, output, flags };
}

export function runCli(main: () => void): void {
  try {
    main();
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  }
}
