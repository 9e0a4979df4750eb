from loop_bie_cli.app import app

app()
