// Placeholder until the harness lands; replaced by the full CLI.
int main() { return 2; }
