"""Reasoning backends: rule oracle, chat-completions client, stub server."""
