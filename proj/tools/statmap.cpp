// Placeholder main; the scenario runner fills this in.
int main() { return 0; }
